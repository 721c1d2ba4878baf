#include "expcap/kernels.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "expcap/errors.hpp"

namespace expcap {

Field InteriorMeasure::to_density(const Grid& grid) const {
  Field d = density.size() ? density : Field::Zero(grid.num_interior());
  if (d.size() != grid.num_interior()) throw GridMismatch("interior density has wrong size");
  if (d.size() && d.minCoeff() < 0.0) throw SupportError("negative density");
  const double cell = grid.cell_measure();
  for (auto [k, m] : atoms) {
    if (k < 0 || k >= grid.num_interior()) throw SupportError("interior atom off the interior node set");
    if (m < 0.0) throw SupportError("negative atom mass");
    d[k] += m / cell;
  }
  return d;
}

double InteriorMeasure::total_mass(const Grid& grid) const {
  return to_density(grid).sum() * grid.cell_measure();
}

Field BoundaryMeasure::singular_density(const Grid& grid) const {
  Field d = Field::Zero(grid.num_boundary());
  const double cell = grid.boundary_cell_measure();
  for (auto [b, m] : atoms) {
    if (b < 0 || b >= grid.num_boundary()) throw SupportError("boundary atom off the boundary node set");
    if (m < 0.0) throw SupportError("negative atom mass");
    d[b] += m / cell;
  }
  return d;
}

Field BoundaryMeasure::regular_density(const Grid& grid) const {
  Field d = density.size() ? density : Field::Zero(grid.num_boundary());
  if (d.size() != grid.num_boundary()) throw GridMismatch("boundary density has wrong size");
  if (d.size() && d.minCoeff() < 0.0) throw SupportError("negative density");
  return d;
}

Field BoundaryMeasure::to_density(const Grid& grid) const {
  return singular_density(grid) + regular_density(grid);
}

double BoundaryMeasure::total_mass(const Grid& grid) const {
  return to_density(grid).sum() * grid.boundary_cell_measure();
}

ShiftedSolver::ShiftedSolver(SparseMatrix A, LinearSolver kind, double cg_tol, int cg_max_iter)
    : A_(std::move(A)), kind_(kind), cg_tol_(cg_tol), cg_max_iter_(cg_max_iter) {}

void ShiftedSolver::factorize(const Field& shift) {
  M_ = A_;
  if (shift.size()) {
    if (shift.size() != M_.rows()) throw GridMismatch("shift has wrong size");
    for (Eigen::Index i = 0; i < shift.size(); ++i) M_.coeffRef(i, i) += shift[i];
  }
  if (kind_ == LinearSolver::Cholesky) {
    if (!analyzed_) {
      ldlt_.analyzePattern(M_);
      analyzed_ = true;
    }
    ldlt_.factorize(M_);
    if (ldlt_.info() != Eigen::Success) throw SolverDiverged("sparse factorization failed");
  }
}

Field ShiftedSolver::solve(const Field& rhs) const {
  if (kind_ == LinearSolver::Cholesky) {
    Field x = ldlt_.solve(rhs);
    last_iterations_ = 1;
    return x;
  }
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.setTolerance(cg_tol_);
  cg.setMaxIterations(cg_max_iter_);
  cg.compute(M_);
  Field x = cg.solve(rhs);
  last_iterations_ = static_cast<int>(cg.iterations());
  if (cg.info() != Eigen::Success) throw SolverDiverged("conjugate gradient hit its iteration cap");
  return x;
}

KernelSet::KernelSet(Grid grid, LinearSolver solver) : grid_(std::move(grid)), solver_(solver) {
  const int N = grid_.num_interior();
  const double ih2 = 1.0 / (grid_.h * grid_.h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(N) * (2 * grid_.dim + 1));
  const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (int k = 0; k < N; ++k) {
    auto [i, j] = grid_.lattice_ij(grid_.interior_lattice[k]);
    trip.emplace_back(k, k, 2.0 * grid_.dim * ih2);
    for (int d = 0; d < 2 * grid_.dim; ++d) {
      int q = grid_.interior_at(i + dirs[d][0], j + dirs[d][1]);
      if (q >= 0) trip.emplace_back(k, q, -ih2);
    }
  }
  A_.resize(N, N);
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();
  base_ = std::make_shared<ShiftedSolver>(A_, solver_);
  base_->factorize(Field());
  zeta0_ = solve(Field::Ones(N));
  compute_eigen();
}

Field KernelSet::apply_laplacian(const Field& u) const { return -(A_ * u); }

Field KernelSet::solve(const Field& rhs) const {
  if (rhs.size() != A_.rows()) throw GridMismatch("right-hand side has wrong size");
  Field x = base_->solve(rhs);
  cg_iterations_ = base_->last_iterations();
  return x;
}

Field KernelSet::boundary_coupling(const Field& g) const {
  if (g.size() != grid_.num_boundary()) throw GridMismatch("boundary data has wrong size");
  Field b = Field::Zero(grid_.num_interior());
  const double ih2 = 1.0 / (grid_.h * grid_.h);
  for (int k = 0; k < grid_.num_boundary(); ++k)
    for (int q : grid_.boundary[k].neighbors) b[q] += g[k] * ih2;
  return b;
}

Field KernelSet::apply_laplacian(const Field& u, const Field& g) const {
  return apply_laplacian(u) + boundary_coupling(g);
}

Field KernelSet::green_apply(const Field& density) const { return solve(density); }

Field KernelSet::poisson_apply(const Field& boundary_values) const {
  return solve(boundary_coupling(boundary_values));
}

void KernelSet::compute_eigen() {
  Field v = grid_.rho;
  v /= v.maxCoeff();
  for (int it = 0; it < 2000; ++it) {
    v = solve(v);
    v /= v.maxCoeff();
    Field Av = A_ * v;
    lambda_ = v.dot(Av) / v.dot(v);
    eigen_residual_ = (Av - lambda_ * v).cwiseAbs().maxCoeff();
    if (eigen_residual_ < 1e-8 && it > 2) {
      rho_star_ = v;
      return;
    }
  }
  throw SolverDiverged("inverse iteration did not reach residual 1e-8");
}

KernelSet assemble(const Grid& grid, LinearSolver solver) { return KernelSet(grid, solver); }

Field green_potential(const KernelSet& ks, const InteriorMeasure& mu) {
  return ks.green_apply(mu.to_density(ks.grid()));
}

Field poisson_potential(const KernelSet& ks, const BoundaryMeasure& mu) {
  return ks.poisson_apply(mu.to_density(ks.grid()));
}

std::pair<Field, double> principal_eigen(const KernelSet& ks) { return {ks.rho_star(), ks.lambda()}; }

Field solve_zeta0(const KernelSet& ks) { return ks.zeta0(); }

Field normal_derivative(const KernelSet& ks, const Field& zeta) {
  const Grid& g = ks.grid();
  if (zeta.size() != g.num_interior()) throw GridMismatch("field size does not match grid");
  Field d(g.num_boundary());
  for (int b = 0; b < g.num_boundary(); ++b) {
    const auto& node = g.boundary[b];
    if (node.inner2 >= 0)
      d[b] = (-4.0 * zeta[node.inner] + zeta[node.inner2]) / (2.0 * g.h);
    else
      d[b] = -zeta[node.inner] / g.h;
  }
  return d;
}

Eigen::MatrixXd green_matrix(const KernelSet& ks) {
  const Grid& g = ks.grid();
  const int N = g.num_interior();
  if (N > 64 * 64) throw std::invalid_argument("dense Green matrix limited to 64^2 interior nodes");
  Eigen::MatrixXd G(N, N);
  const double inv = 1.0 / g.cell_measure();
  for (int k = 0; k < N; ++k) {
    Field e = Field::Zero(N);
    e[k] = inv;
    G.col(k) = ks.solve(e);
  }
  return G;
}

void write_green_matrix_csv(const std::string& path, const KernelSet& ks) {
  Eigen::MatrixXd G = green_matrix(ks);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    for (Eigen::Index j = 0; j < G.cols(); ++j) os << (j ? "," : "") << G(i, j);
    os << '\n';
  }
}

}  // namespace expcap
