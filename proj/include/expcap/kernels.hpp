#pragma once
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "expcap/grid.hpp"

namespace expcap {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Nonnegative measure on interior nodes: atoms by interior index plus a density.
struct InteriorMeasure {
  std::vector<std::pair<int, double>> atoms;
  Field density;  // empty means zero

  Field to_density(const Grid& grid) const;  // atoms become mass / h^d
  double total_mass(const Grid& grid) const;
};

/// Nonnegative measure on boundary nodes. Atoms form the singular part,
/// the density the regular part.
struct BoundaryMeasure {
  std::vector<std::pair<int, double>> atoms;
  Field density;

  Field to_density(const Grid& grid) const;  // atoms become mass / h^(d-1)
  Field singular_density(const Grid& grid) const;
  Field regular_density(const Grid& grid) const;
  double total_mass(const Grid& grid) const;
};

enum class LinearSolver { Cholesky, ConjugateGradient };

/// Solves (A + diag(d)) x = b for the grid Laplacian A = -Delta_h.
class ShiftedSolver {
 public:
  ShiftedSolver(SparseMatrix A, LinearSolver kind, double cg_tol = 1e-12, int cg_max_iter = 20000);
  void factorize(const Field& shift);
  Field solve(const Field& rhs) const;
  int last_iterations() const { return last_iterations_; }

 private:
  SparseMatrix A_;
  LinearSolver kind_;
  double cg_tol_;
  int cg_max_iter_;
  SparseMatrix M_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  bool analyzed_ = false;
  mutable int last_iterations_ = 0;
};

class KernelSet {
 public:
  explicit KernelSet(Grid grid, LinearSolver solver = LinearSolver::Cholesky);

  const Grid& grid() const { return grid_; }
  const SparseMatrix& laplacian() const { return A_; }  // -Delta_h, Dirichlet
  LinearSolver solver_kind() const { return solver_; }

  Field apply_laplacian(const Field& u) const;  // Delta_h u with zero boundary values
  Field solve(const Field& rhs) const;           // (-Delta_h)^{-1}
  // boundary values g contribute g_b / h^2 to every interior neighbour
  Field boundary_coupling(const Field& g) const;
  // Delta_h applied to u extended by boundary values g
  Field apply_laplacian(const Field& u, const Field& g) const;

  Field green_apply(const Field& density) const;
  Field poisson_apply(const Field& boundary_values) const;

  const Field& rho_star() const { return rho_star_; }
  double lambda() const { return lambda_; }
  double eigen_residual() const { return eigen_residual_; }
  const Field& zeta0() const { return zeta0_; }

  int cg_iterations() const { return cg_iterations_; }

 private:
  Grid grid_;
  LinearSolver solver_;
  SparseMatrix A_;
  std::shared_ptr<ShiftedSolver> base_;
  Field rho_star_;
  double lambda_ = 0.0;
  double eigen_residual_ = 0.0;
  Field zeta0_;
  mutable int cg_iterations_ = 0;

  friend KernelSet assemble(const Grid&, LinearSolver);
  void compute_eigen();
};

KernelSet assemble(const Grid& grid, LinearSolver solver = LinearSolver::Cholesky);

Field green_potential(const KernelSet& ks, const InteriorMeasure& mu);
Field poisson_potential(const KernelSet& ks, const BoundaryMeasure& mu);
std::pair<Field, double> principal_eigen(const KernelSet& ks);
Field solve_zeta0(const KernelSet& ks);

// outward normal derivative at every boundary node of a field vanishing on the boundary
Field normal_derivative(const KernelSet& ks, const Field& zeta);

// dense G(x, y) on interior nodes, only for grids with at most 64^2 interior nodes
Eigen::MatrixXd green_matrix(const KernelSet& ks);
void write_green_matrix_csv(const std::string& path, const KernelSet& ks);

}  // namespace expcap
