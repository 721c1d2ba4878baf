#pragma once
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "expcap/kernels.hpp"

namespace expcap {

struct SolverOptions {
  double step_tol = 1e-10;
  double residual_tol = 1e-8;
  int max_iterations = 500;
};

struct SolveReport {
  Field u;
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<double> truncation_levels;
  double absorption = 0.0;      // sum (e^u - 1) dx
  double absorption_rho = 0.0;  // sum (e^u - 1) rho dx
  double mass_estimate = 0.0;   // sum (u + (e^u - 1) zeta0) dx
  double residual = 0.0;
  bool monotone_flag = true;
};

/// Newton-type monotone iteration for A u + a (e^u - 1) = rhs started from a supersolution.
/// `absorb` is 1 where the absorption acts and 0 on punctured nodes.
SolveReport solve_semilinear(const KernelSet& ks, const Field& rhs, const Field& start, const Field& absorb,
                             const SolverOptions& opts = {});

SolveReport solve_interior(const InteriorMeasure& mu, const KernelSet& ks, const SolverOptions& opts = {});
SolveReport solve_boundary(const BoundaryMeasure& mu, const KernelSet& ks, const SolverOptions& opts = {});

// Equation dropped on `puncture` nodes, which carry only harmonic coupling plus an optional source.
SolveReport solve_punctured(const BoundaryMeasure& mu, const std::vector<int>& puncture, double source_mass,
                            const KernelSet& ks, const SolverOptions& opts = {});

struct MeasureSpec {
  struct Atom {
    double x = 0.0, y = 0.0, mass = 0.0;
  };
  std::vector<Atom> atoms;
  std::function<double(double, double)> density;

  InteriorMeasure interior_on(const Grid& grid) const;
  BoundaryMeasure boundary_on(const Grid& grid) const;
};

enum class MeasureKind { Boundary, Interior };
enum class Verdict { AdmissibleAtScale, DivergentTrend };
std::string to_string(Verdict v);

struct AdmissibilityRow {
  int n;
  double h;
  double integral;
};

struct AdmissibilityResult {
  Verdict verdict = Verdict::AdmissibleAtScale;
  std::vector<AdmissibilityRow> table;
  double slope = 0.0;
  std::string annotation;
};

AdmissibilityResult admissibility_test(const MeasureSpec& mu, MeasureKind kind,
                                       const std::vector<const KernelSet*>& refinements, double slope_tol = 0.2);

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

std::vector<double> default_truncation_ladder();

struct TheoremALevel {
  double k;
  double mass_estimate;
  double bound;
  double min_increment;
};

struct TheoremAReport {
  SolveReport final;
  std::vector<TheoremALevel> levels;
  double c = 0.0;
  double max_violation = 0.0;
  bool bound_ok = true;
};

TheoremAReport theorem_a_scheme(const BoundaryMeasure& mu, const KernelSet& ks,
                                const std::vector<double>& k_levels = default_truncation_ladder(),
                                const SolverOptions& opts = {});

struct TestFunction {
  std::function<double(double, double)> zeta;
  std::function<double(double, double)> laplacian;  // empty: discrete Laplacian of the samples
  Field values;  // nodal values used instead of `zeta` when set (zero boundary values)
  double mu_pairing = std::numeric_limits<double>::quiet_NaN();
};

enum class NormalDifference { SecondOrder, Flux };

struct ResidualStats {
  double max_abs = 0.0;
  std::vector<double> values;
};

ResidualStats weak_residual(const Field& u, const BoundaryMeasure& mu, const KernelSet& ks,
                            const std::vector<TestFunction>& tests,
                            NormalDifference nd = NormalDifference::SecondOrder);
ResidualStats weak_residual(const Field& u, const InteriorMeasure& mu, const KernelSet& ks,
                            const std::vector<TestFunction>& tests);

// x(1-x)y(1-y) x^j y^k with j + k <= 3
std::vector<TestFunction> square_polynomial_tests();
// (R^2 - r^2) X^j Y^k about the disk centre with exact Laplacian; pairing against a constant density
std::vector<TestFunction> disk_polynomial_tests(double density);

double keller_osserman_check(const Field& u, const Grid& grid);

bool monotone_comparison(const BoundaryMeasure& mu1, const BoundaryMeasure& mu2, const KernelSet& ks);
bool monotone_comparison(const InteriorMeasure& mu1, const InteriorMeasure& mu2, const KernelSet& ks);

}  // namespace expcap
