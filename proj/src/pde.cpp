#include "expcap/pde.hpp"

#include <algorithm>
#include <cmath>

#include "expcap/errors.hpp"

namespace expcap {

namespace {

constexpr double kExpLimit = 700.0;

Field checked_exp(const Field& u) {
  if (!u.allFinite() || u.maxCoeff() > kExpLimit) throw NotAdmissible("iterate too large for exp");
  return u.array().exp().matrix();
}

void finish_report(SolveReport& rep, const KernelSet& ks) {
  const Grid& g = ks.grid();
  Field em1 = rep.u.array().expm1().matrix();
  rep.absorption = em1.sum() * g.cell_measure();
  rep.absorption_rho = em1.dot(g.weights(WeightKind::Rho));
  rep.mass_estimate = (rep.u + em1.cwiseProduct(ks.zeta0())).sum() * g.cell_measure();
}

}  // namespace

SolveReport solve_semilinear(const KernelSet& ks, const Field& rhs, const Field& start, const Field& absorb,
                             const SolverOptions& opts) {
  const SparseMatrix& A = ks.laplacian();
  SolveReport rep;
  Field u = start;
  ShiftedSolver S(A, ks.solver_kind());
  const double rhs_scale = rhs.size() ? rhs.cwiseAbs().maxCoeff() : 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Field e = checked_exp(u);
    Field shift = absorb.cwiseProduct(e);
    S.factorize(shift);
    Field b = absorb.cwiseProduct((e.cwiseProduct(u) - (e.array() - 1.0).matrix())) + rhs;
    Field next = S.solve(b);
    if (!next.allFinite()) throw NotAdmissible("non-finite Newton iterate");
    double rise = (next - u).maxCoeff();
    if (rise > 1e-11 * (1.0 + u.cwiseAbs().maxCoeff())) rep.monotone_flag = false;
    double step = (next - u).cwiseAbs().maxCoeff();
    u = std::move(next);
    Field en = checked_exp(u);
    Field F = A * u + absorb.cwiseProduct((en.array() - 1.0).matrix()) - rhs;
    double scale = 1.0 + rhs_scale + absorb.cwiseProduct(en).maxCoeff();
    double res = F.cwiseAbs().maxCoeff() / scale;
    rep.residual_history.push_back(res);
    rep.iterations = it;
    rep.residual = res;
    if (step < opts.step_tol && res < opts.residual_tol) {
      rep.u = std::move(u);
      finish_report(rep, ks);
      return rep;
    }
  }
  throw NoConvergence("monotone iteration hit its iteration cap");
}

SolveReport solve_interior(const InteriorMeasure& mu, const KernelSet& ks, const SolverOptions& opts) {
  Field b = mu.to_density(ks.grid());
  Field start = ks.solve(b);
  return solve_semilinear(ks, b, start, Field::Ones(b.size()), opts);
}

SolveReport solve_boundary(const BoundaryMeasure& mu, const KernelSet& ks, const SolverOptions& opts) {
  Field b = ks.boundary_coupling(mu.to_density(ks.grid()));
  Field start = ks.solve(b);
  return solve_semilinear(ks, b, start, Field::Ones(b.size()), opts);
}

SolveReport solve_punctured(const BoundaryMeasure& mu, const std::vector<int>& puncture, double source_mass,
                            const KernelSet& ks, const SolverOptions& opts) {
  const Grid& g = ks.grid();
  if (source_mass < 0.0) throw SupportError("negative source mass");
  Field b = ks.boundary_coupling(mu.to_density(g));
  Field absorb = Field::Ones(g.num_interior());
  for (int k : puncture) {
    if (k < 0 || k >= g.num_interior()) throw SupportError("puncture off the interior node set");
    absorb[k] = 0.0;
    if (!puncture.empty()) b[k] += source_mass / (puncture.size() * g.cell_measure());
  }
  Field start = ks.solve(b);
  return solve_semilinear(ks, b, start, absorb, opts);
}

InteriorMeasure MeasureSpec::interior_on(const Grid& grid) const {
  InteriorMeasure mu;
  for (const auto& a : atoms) mu.atoms.emplace_back(grid.nearest_interior(a.x, a.y), a.mass);
  if (density) {
    mu.density = Field(grid.num_interior());
    for (int k = 0; k < grid.num_interior(); ++k) mu.density[k] = density(grid.x[k], grid.y[k]);
  }
  return mu;
}

BoundaryMeasure MeasureSpec::boundary_on(const Grid& grid) const {
  BoundaryMeasure mu;
  for (const auto& a : atoms) mu.atoms.emplace_back(grid.nearest_boundary(a.x, a.y), a.mass);
  if (density) {
    mu.density = Field(grid.num_boundary());
    for (int b = 0; b < grid.num_boundary(); ++b) mu.density[b] = density(grid.bx[b], grid.by[b]);
  }
  return mu;
}

std::string to_string(Verdict v) { return v == Verdict::AdmissibleAtScale ? "AdmissibleAtScale" : "DivergentTrend"; }

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

AdmissibilityResult admissibility_test(const MeasureSpec& mu, MeasureKind kind,
                                       const std::vector<const KernelSet*>& refinements, double slope_tol) {
  if (refinements.size() < 3) throw std::invalid_argument("admissibility trend needs at least 3 refinements");
  AdmissibilityResult out;
  std::vector<double> lx, ly;
  for (const KernelSet* ks : refinements) {
    const Grid& g = ks->grid();
    Field pot;
    Field w;
    if (kind == MeasureKind::Interior) {
      pot = green_potential(*ks, mu.interior_on(g));
      w = g.weights(WeightKind::Lebesgue);
    } else {
      pot = poisson_potential(*ks, mu.boundary_on(g));
      w = g.weights(WeightKind::Rho);
    }
    if (pot.maxCoeff() > kExpLimit) {
      out.verdict = Verdict::DivergentTrend;
      out.annotation = "exp overflow at n=" + std::to_string(g.n);
      out.table.push_back({g.n, g.h, std::numeric_limits<double>::infinity()});
      continue;
    }
    double I = pot.array().exp().matrix().dot(w);
    out.table.push_back({g.n, g.h, I});
    lx.push_back(std::log(1.0 / g.h));
    ly.push_back(std::log(I));
  }
  if (!out.annotation.empty()) {
    out.slope = std::numeric_limits<double>::infinity();
    return out;
  }
  out.slope = least_squares_slope(lx, ly);
  out.verdict = out.slope > slope_tol ? Verdict::DivergentTrend : Verdict::AdmissibleAtScale;
  return out;
}

std::vector<double> default_truncation_ladder() {
  std::vector<double> k;
  for (int i = 0; i <= 7; ++i) k.push_back(std::ldexp(1.0, i));
  return k;
}

TheoremAReport theorem_a_scheme(const BoundaryMeasure& mu, const KernelSet& ks, const std::vector<double>& k_levels,
                                const SolverOptions& opts) {
  const Grid& g = ks.grid();
  Field sing = mu.singular_density(g);
  Field reg = mu.regular_density(g);
  Field ps = ks.poisson_apply(sing);
  if (ps.maxCoeff() > kExpLimit || !std::isfinite(ps.array().exp().matrix().dot(g.weights(WeightKind::Rho))))
    throw NotAdmissible("singular part fails exp-integrability at this grid");

  TheoremAReport rep;
  rep.c = normal_derivative(ks, ks.zeta0()).cwiseAbs().maxCoeff();
  const double total = mu.total_mass(g);
  Field prev;
  for (double k : k_levels) {
    Field data = sing + reg.cwiseMin(k);
    Field b = ks.boundary_coupling(data);
    SolveReport s = solve_semilinear(ks, b, ks.solve(b), Field::Ones(g.num_interior()), opts);
    TheoremALevel lvl{k, s.mass_estimate, rep.c * total, 0.0};
    if (prev.size()) {
      lvl.min_increment = (s.u - prev).minCoeff();
      rep.max_violation = std::max(rep.max_violation, -lvl.min_increment);
    }
    if (lvl.mass_estimate > lvl.bound) rep.bound_ok = false;
    rep.levels.push_back(lvl);
    prev = s.u;
    rep.final = std::move(s);
  }
  rep.final.truncation_levels = k_levels;
  return rep;
}

namespace {

void check_vanishing(const TestFunction& t, const Grid& g) {
  const double tol = 1e-10;
  if (g.dim == 1) {
    if (std::abs(t.zeta(0.0, 0.0)) > tol || std::abs(t.zeta(1.0, 0.0)) > tol)
      throw TestNotAdmissible("test function does not vanish on the boundary");
    return;
  }
  for (int i = 0; i <= 64; ++i) {
    double s = i / 64.0;
    if (g.shape == Shape::Disk) {
      double th = 2 * M_PI * s;
      if (std::abs(t.zeta(0.5 + 0.5 * std::cos(th), 0.5 + 0.5 * std::sin(th))) > tol)
        throw TestNotAdmissible("test function does not vanish on the boundary");
    } else {
      for (auto [px, py] : {std::pair{s, 0.0}, {s, 1.0}, {0.0, s}, {1.0, s}})
        if (std::abs(t.zeta(px, py)) > tol) throw TestNotAdmissible("test function does not vanish on the boundary");
    }
  }
}

struct Sampled {
  Field zeta, lap;
};

Sampled sample(const TestFunction& t, const KernelSet& ks) {
  const Grid& g = ks.grid();
  Sampled s;
  if (t.values.size()) {
    if (t.values.size() != g.num_interior()) throw GridMismatch("test field size does not match grid");
    s.zeta = t.values;
    s.lap = ks.apply_laplacian(s.zeta);
    return s;
  }
  check_vanishing(t, g);
  s.zeta = Field(g.num_interior());
  for (int k = 0; k < g.num_interior(); ++k) s.zeta[k] = t.zeta(g.x[k], g.y[k]);
  if (t.laplacian) {
    s.lap = Field(g.num_interior());
    for (int k = 0; k < g.num_interior(); ++k) s.lap[k] = t.laplacian(g.x[k], g.y[k]);
  } else {
    s.lap = ks.apply_laplacian(s.zeta);
  }
  return s;
}

}  // namespace

ResidualStats weak_residual(const Field& u, const BoundaryMeasure& mu, const KernelSet& ks,
                            const std::vector<TestFunction>& tests, NormalDifference nd) {
  const Grid& g = ks.grid();
  if (u.size() != g.num_interior()) throw GridMismatch("solution size does not match grid");
  Field masses = mu.to_density(g) * g.boundary_cell_measure();
  Field em1 = u.array().expm1().matrix();
  ResidualStats out;
  for (const auto& t : tests) {
    Sampled s = sample(t, ks);
    double vol = (-u.cwiseProduct(s.lap) + em1.cwiseProduct(s.zeta)).sum() * g.cell_measure();
    Field dn;
    if (nd == NormalDifference::SecondOrder) {
      dn = normal_derivative(ks, s.zeta);
    } else {
      dn = Field::Zero(g.num_boundary());
      for (int b = 0; b < g.num_boundary(); ++b)
        for (int q : g.boundary[b].neighbors) dn[b] -= s.zeta[q] / g.h;
    }
    double r = vol + dn.dot(masses);
    out.values.push_back(r);
    out.max_abs = std::max(out.max_abs, std::abs(r));
  }
  return out;
}

ResidualStats weak_residual(const Field& u, const InteriorMeasure& mu, const KernelSet& ks,
                            const std::vector<TestFunction>& tests) {
  const Grid& g = ks.grid();
  if (u.size() != g.num_interior()) throw GridMismatch("solution size does not match grid");
  Field dens = mu.to_density(g);
  Field em1 = u.array().expm1().matrix();
  ResidualStats out;
  for (const auto& t : tests) {
    Sampled s = sample(t, ks);
    double vol = (-u.cwiseProduct(s.lap) + em1.cwiseProduct(s.zeta)).sum() * g.cell_measure();
    double pair = std::isnan(t.mu_pairing) ? s.zeta.dot(dens) * g.cell_measure() : t.mu_pairing;
    double r = vol - pair;
    out.values.push_back(r);
    out.max_abs = std::max(out.max_abs, std::abs(r));
  }
  return out;
}

std::vector<TestFunction> square_polynomial_tests() {
  std::vector<TestFunction> tests;
  for (int j = 0; j <= 3; ++j)
    for (int k = 0; j + k <= 3; ++k) {
      TestFunction t;
      t.zeta = [j, k](double x, double y) {
        return x * (1 - x) * y * (1 - y) * std::pow(x, j) * std::pow(y, k);
      };
      tests.push_back(std::move(t));
    }
  return tests;
}

std::vector<TestFunction> disk_polynomial_tests(double density) {
  const double R = 0.5;
  std::vector<TestFunction> tests;
  for (int j = 0; j <= 3; ++j)
    for (int k = 0; j + k <= 3; ++k) {
      TestFunction t;
      auto q = [j, k](double X, double Y) { return std::pow(X, j) * std::pow(Y, k); };
      auto lapq = [j, k](double X, double Y) {
        double a = j >= 2 ? j * (j - 1) * std::pow(X, j - 2) * std::pow(Y, k) : 0.0;
        double b = k >= 2 ? k * (k - 1) * std::pow(X, j) * std::pow(Y, k - 2) : 0.0;
        return a + b;
      };
      t.zeta = [q, R](double x, double y) {
        double X = x - 0.5, Y = y - 0.5;
        return (R * R - X * X - Y * Y) * q(X, Y);
      };
      t.laplacian = [q, lapq, j, k, R](double x, double y) {
        double X = x - 0.5, Y = y - 0.5;
        return (R * R - X * X - Y * Y) * lapq(X, Y) - 4.0 * (1 + j + k) * q(X, Y);
      };
      double ang = 0.0;
      if (j % 2 == 0 && k % 2 == 0)
        ang = 2.0 * std::tgamma((j + 1) / 2.0) * std::tgamma((k + 1) / 2.0) / std::tgamma((j + k + 2) / 2.0);
      const int m = j + k;
      double rad = std::pow(R, m + 4) * (1.0 / (m + 2) - 1.0 / (m + 4));
      t.mu_pairing = density * ang * rad;
      tests.push_back(std::move(t));
    }
  return tests;
}

double keller_osserman_check(const Field& u, const Grid& grid) {
  if (u.size() != grid.num_interior()) throw GridMismatch("field size does not match grid");
  return (u.array() + 2.0 * grid.rho.array().log()).maxCoeff();
}

bool monotone_comparison(const BoundaryMeasure& mu1, const BoundaryMeasure& mu2, const KernelSet& ks) {
  const Grid& g = ks.grid();
  if ((mu1.to_density(g) - mu2.to_density(g)).maxCoeff() > 0.0)
    throw NotComparable("first measure is not below the second");
  Field u1 = solve_boundary(mu1, ks).u, u2 = solve_boundary(mu2, ks).u;
  return (u1 - u2).maxCoeff() <= 1e-10;
}

bool monotone_comparison(const InteriorMeasure& mu1, const InteriorMeasure& mu2, const KernelSet& ks) {
  const Grid& g = ks.grid();
  if ((mu1.to_density(g) - mu2.to_density(g)).maxCoeff() > 0.0)
    throw NotComparable("first measure is not below the second");
  Field u1 = solve_interior(mu1, ks).u, u2 = solve_interior(mu2, ks).u;
  return (u1 - u2).maxCoeff() <= 1e-10;
}

}  // namespace expcap
