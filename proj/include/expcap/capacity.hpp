#pragma once
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "expcap/kernels.hpp"
#include "expcap/orlicz.hpp"

namespace expcap {

/// Finite node set; interior indices or boundary indices depending on `on_boundary`.
struct CompactSet {
  std::vector<int> nodes;
  std::string label;
  bool on_boundary = false;

  bool empty() const { return nodes.empty(); }
};

CompactSet interior_set(std::vector<int> nodes, std::string label = {});
CompactSet boundary_set(std::vector<int> nodes, std::string label = {});

struct CapacityOptions {
  int rings = 1;                 // dilation defining the neighbourhood of K
  int lbfgs_iterations = 4000;
  int polish_iterations = 2000;
  int dual_iterations = 500;
  double tolerance = 1e-12;
};

struct CapacityEstimate {
  std::string label;
  int n = 0;
  double primal_value = 0.0;     // Orlicz (Amemiya) P* norm, certified upper bound
  double primal_luxemburg = 0.0; // Luxemburg P* norm of the same test function
  double primal_maximal = 0.0;   // integral of M[Delta eta], interior only
  double dual_value = 0.0;       // certified lower bound
  double dual_closed_form = -1.0;  // 1 / ||kernel column|| for singletons
  Field eta_star;
  std::vector<std::pair<int, double>> mu_star;
  double gap = 0.0;
  int iterations = 0;
  bool primal_converged = false;
  bool dual_converged = false;
  double wall_time = 0.0;

  double relative_gap() const { return primal_value > 0 ? gap / primal_value : 0.0; }
};

struct ObjectiveValue {
  double value = 0.0;
  Field gradient;
};

// Orlicz P* norm of Delta_h eta with weight h^d and its gradient in eta
ObjectiveValue interior_objective(const Field& eta, const KernelSet& ks);
// Orlicz P*_rho norm of rho^{-1} Delta_h(rho* P[eta]) and its gradient in the boundary values eta
ObjectiveValue boundary_objective(const Field& eta, const KernelSet& ks);

// Delta_h(rho* P[eta]) on interior nodes
Field boundary_operator(const Field& eta, const KernelSet& ks);

CapacityEstimate primal_interior(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts = {});
CapacityEstimate dual_interior(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts = {});
CapacityEstimate primal_boundary(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts = {});
CapacityEstimate dual_boundary(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts = {});

// primal and dual together with the gap
CapacityEstimate estimate_capacity(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts = {});

struct Pairing {
  double a = 0.0;  // x-first
  double b = 0.0;  // boundary-first
  double holder_bound = 0.0;
};
Pairing pairing(const Field& eta, const BoundaryMeasure& mu, const KernelSet& ks);

struct ChebyshevReport {
  double norm = 0.0;   // ||eta||_{L^1} + ||Delta eta||_{P*}
  double bound = 0.0;  // norm / lambda
  double primal = 0.0; // primal value of {eta >= lambda}
  bool holds = true;
  CompactSet superlevel;
};
ChebyshevReport chebyshev_bound(const Field& eta, double lam, const KernelSet& ks, double slack = 1e-6,
                                const CapacityOptions& opts = {});

// lhs: weak-L1 quasi-norm of the second-difference tensor, rhs: llnl_norm of Delta eta
std::pair<double, double> weak_l1_hessian(const Field& eta, const KernelSet& ks);

struct BmpReport {
  double value = 0.0;
  Field eta;
  int iterations = 0;
};
// minimizes int |Delta eta| + |grad eta|^2 over the primal feasible set
BmpReport bmp_functional(const CompactSet& K, const KernelSet& ks, int iterations = 2000, int rings = 1);

void write_capacity_csv_header(std::ostream& os);
void write_capacity_csv_row(std::ostream& os, const CapacityEstimate& e);

}  // namespace expcap
