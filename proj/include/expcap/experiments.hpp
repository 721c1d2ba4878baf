#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "expcap/capacity.hpp"
#include "expcap/pde.hpp"

namespace expcap {

struct ExperimentConfig {
  std::string name;
  Shape shape = Shape::Disk;
  int n = 64;
  std::vector<int> ladder = {32, 64, 128};
  std::vector<double> masses = {2, 8, 11, 14, 20};
  double mass = 5.0;
  double density = 0.0;
  double atom_x = 0.5, atom_y = 0.5;
  double target_x = 0.5, target_y = 0.5;
  int target_size = 1;  // 0 empty, 1 singleton, 3 cluster, 5 segment
  std::vector<double> radii = {0.4, 0.2, 0.1, 0.05};
  std::vector<int> rings = {1, 2, 3};
  double slope_tol = 0.2;
  double threshold_tol = 0.15;
  double extend_slope = 0.5;
  double residual_tol = 1e-3;
  double source_mass = 0.0;
  double boundary_value = 1.0;
  std::string output;

  void validate() const;
};

/// CSV table with a fixed header; numbers use the shortest round-trip form.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  void write(std::ostream& os) const;
  void write(const std::string& path) const;
};

std::string fmt(double v);
std::string fmt(int v);

struct ThresholdResult {
  Table table;
  double m_star = 0.0;
  double lower = 0.0, upper = 0.0;
  bool monotone = true;  // admissible below the bracket, divergent above it
  bool brackets_4pi = false;
  bool pass = false;
};
ThresholdResult run_removability_threshold(const ExperimentConfig& cfg);

struct TheoremBResult {
  Table interior;
  Table boundary;
  bool interior_holds = true;
  bool boundary_holds = true;
  double max_fubini = 0.0;
};
TheoremBResult run_theorem_b_inequality(const ExperimentConfig& cfg);

enum class Extension { Extends, Obstructed };
std::string to_string(Extension e);

struct ModerateResult {
  Table table;
  Extension verdict = Extension::Extends;
  double slope = 0.0;
  double residual = 0.0;
};
ModerateResult run_moderate_extension(const ExperimentConfig& cfg);

struct ProbeResult {
  Table table;
  double minimizer_slope = 0.0;  // d log(est_integral) / d log h along the minimizer family
  double fixed_spread = 0.0;     // max/min of est for the fixed test function
};
ProbeResult run_boundary_probe(const ExperimentConfig& cfg);

// boundary probe integrand summed: |w| ln(1 + rho^-2 |w|) with w = Delta(rho* P[eta])
double est_integral(const Field& eta, const KernelSet& ks);

struct ConvergenceResult {
  Table table;
  bool eigen_ok = false;
  bool green_ok = false;
  bool zeta_ok = false;
};
ConvergenceResult run_convergence_suite(const ExperimentConfig& cfg);

// nodes of the configured target set around the nearest interior node
CompactSet target_set(const Grid& g, double x, double y, int size);
// 1 near (x, y) within r/2, cos^2 down to 0 at distance r
Field cutoff(const Grid& g, double x, double y, double r);
Field boundary_cutoff(const Grid& g, double x, double y, double r);

}  // namespace expcap
