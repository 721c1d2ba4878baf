#include "expcap/capacity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "expcap/errors.hpp"

namespace expcap {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const NFunction& expo() {
  static const NFunction nf = exponential_pair();
  return nf;
}

using Objective = std::function<ObjectiveValue(const Field&)>;
using Projection = std::function<void(Field&)>;

struct SearchResult {
  Field x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

// spectral projected gradient with a nonmonotone Armijo search
SearchResult projected_descent(const Objective& fg, Field x, const Projection& project, int iterations,
                               double tol) {
  project(x);
  ObjectiveValue cur = fg(x);
  SearchResult best{x, cur.value, 0, false};
  if (x.size() == 0) {
    best.converged = true;
    return best;
  }
  std::vector<double> hist(10, cur.value);
  double gmax = cur.gradient.cwiseAbs().maxCoeff();
  if (gmax == 0.0) {
    best.converged = true;
    return best;
  }
  double lam = 1.0 / gmax;
  double window_start = cur.value;
  int it = 0;
  for (; it < iterations; ++it) {
    Field trial = x - lam * cur.gradient;
    project(trial);
    Field d = trial - x;
    if (d.cwiseAbs().maxCoeff() < 1e-15) {
      best.converged = true;
      break;
    }
    const double gd = cur.gradient.dot(d);
    const double fmax = *std::max_element(hist.end() - 10, hist.end());
    double t = 1.0;
    Field xn;
    ObjectiveValue nxt;
    while (true) {
      xn = x + t * d;
      try {
        nxt = fg(xn);
        if (nxt.value <= fmax + 1e-4 * t * gd) break;
      } catch (const Overflow&) {
      }
      t *= 0.5;
      if (t < 1e-14) break;
    }
    if (t < 1e-14) {
      best.converged = true;
      break;
    }
    Field s = xn - x, y = nxt.gradient - cur.gradient;
    const double sy = s.dot(y);
    if (sy > 0) lam = std::clamp(s.squaredNorm() / sy, 1e-12, 1e12);
    x = xn;
    cur = nxt;
    hist.push_back(cur.value);
    if (cur.value < best.f) {
      best.f = cur.value;
      best.x = x;
    }
    if ((it + 1) % 100 == 0) {
      if (window_start - best.f <= tol * std::abs(best.f)) {
        best.converged = true;
        ++it;
        break;
      }
      window_start = best.f;
    }
  }
  best.iterations = it;
  return best;
}

class CeresObjective : public ceres::FirstOrderFunction {
 public:
  explicit CeresObjective(Objective fg, int size) : fg_(std::move(fg)), size_(size) {}
  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    Field x = Eigen::Map<const Field>(parameters, size_);
    ObjectiveValue v;
    try {
      v = fg_(x);
    } catch (const Overflow&) {
      return false;
    }
    if (!std::isfinite(v.value)) return false;
    *cost = v.value;
    if (gradient) Eigen::Map<Field>(gradient, size_) = v.gradient;
    return true;
  }
  int NumParameters() const override { return size_; }

 private:
  Objective fg_;
  int size_;
};

struct LbfgsResult {
  Field x;
  int iterations = 0;
  bool converged = false;
};

LbfgsResult run_lbfgs(const Objective& fg, const Field& x0, int iterations) {
  LbfgsResult out{x0, 0, true};
  if (x0.size() == 0) return out;
  // objective scale is tiny in the free variables; rescale so gradients are O(1)
  ObjectiveValue v0 = fg(x0);
  const double scale = std::max(v0.gradient.cwiseAbs().maxCoeff(), 1e-300);
  Objective scaled = [&](const Field& x) {
    ObjectiveValue v = fg(x);
    v.value /= scale;
    v.gradient /= scale;
    return v;
  };
  ceres::GradientProblem problem(new CeresObjective(scaled, static_cast<int>(x0.size())));
  ceres::GradientProblemSolver::Options o;
  o.line_search_direction_type = ceres::LBFGS;
  o.max_num_iterations = iterations;
  o.function_tolerance = 1e-15;
  o.gradient_tolerance = 1e-13;
  o.parameter_tolerance = 1e-15;
  o.logging_type = ceres::SILENT;
  ceres::GradientProblemSolver::Summary summary;
  Field x = x0;
  ceres::Solve(o, problem, x.data(), &summary);
  out.x = x;
  out.iterations = static_cast<int>(summary.iterations.size());
  out.converged = summary.termination_type == ceres::CONVERGENCE;
  return out;
}

void project_simplex(Field& m) {
  const Eigen::Index n = m.size();
  if (n == 0) return;
  std::vector<double> s(m.data(), m.data() + n);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cum += s[i];
    double t = (cum - 1.0) / (i + 1);
    if (s[i] - t > 0) theta = t;
  }
  for (Eigen::Index i = 0; i < n; ++i) m[i] = std::max(m[i] - theta, 0.0);
  m /= m.sum();
}

// free/fixed split for the box [0,1] with eta = 1 on `ones`
struct Split {
  std::vector<int> free;
  Field base;  // 1 on fixed-one nodes, 0 elsewhere

  Field full(const Field& x) const {
    Field e = base;
    for (size_t i = 0; i < free.size(); ++i) e[free[i]] = x[i];
    return e;
  }
  Field restrict(const Field& e) const {
    Field x(free.size());
    for (size_t i = 0; i < free.size(); ++i) x[i] = e[free[i]];
    return x;
  }
};

Split make_split(int size, const std::vector<int>& ones) {
  Split s;
  s.base = Field::Zero(size);
  for (int k : ones) s.base[k] = 1.0;
  for (int k = 0; k < size; ++k)
    if (s.base[k] == 0.0) s.free.push_back(k);
  return s;
}

void clamp01(Field& x) { x = x.cwiseMax(0.0).cwiseMin(1.0); }

void check_interior_set(const CompactSet& K, const Grid& g) {
  if (K.on_boundary) throw SupportError("expected an interior set");
  for (int k : K.nodes)
    if (k < 0 || k >= g.num_interior()) throw SupportError("set node off the interior node set");
}

void check_boundary_set(const CompactSet& K, const Grid& g) {
  if (!K.on_boundary) throw SupportError("expected a boundary set");
  for (int b : K.nodes)
    if (b < 0 || b >= g.num_boundary()) throw SupportError("set node off the boundary node set");
}

std::vector<int> interior_neighbourhood(const CompactSet& K, const Grid& g, int rings) {
  std::vector<int> inner = rings > 1 ? g.dilate(K.nodes, rings - 1) : K.nodes;
  const int stencil = 2 * g.dim;
  for (int k : inner) {
    auto [i, j] = g.lattice_ij(g.interior_lattice[k]);
    int count = 0;
    const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (int d = 0; d < stencil; ++d) count += g.interior_at(i + dirs[d][0], j + dirs[d][1]) >= 0;
    if (count < stencil) throw Infeasible("neighbourhood of " + K.label + " reaches the boundary collar");
  }
  return g.dilate(K.nodes, rings);
}

CapacityEstimate run_primal(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts,
                            const std::vector<int>& ones, int size, const Field& warm,
                            const std::function<ObjectiveValue(const Field&)>& full_objective) {
  const auto t0 = Clock::now();
  CapacityEstimate est;
  est.label = K.label;
  est.n = ks.grid().n;
  est.eta_star = Field::Zero(size);
  if (K.empty()) {
    est.primal_converged = true;
    est.wall_time = seconds_since(t0);
    return est;
  }
  Split split = make_split(size, ones);
  Objective fg = [&](const Field& x) {
    ObjectiveValue v = full_objective(split.full(x));
    return ObjectiveValue{v.value, split.restrict(v.gradient)};
  };
  Field x0 = split.restrict(warm);
  clamp01(x0);
  double best = fg(x0).value;
  Field best_x = x0;

  LbfgsResult lb = run_lbfgs(fg, x0, opts.lbfgs_iterations);
  Field xc = lb.x;
  clamp01(xc);
  double fc = fg(xc).value;
  if (fc < best) {
    best = fc;
    best_x = xc;
  }
  SearchResult pol = projected_descent(fg, best_x, clamp01, opts.polish_iterations, opts.tolerance);
  if (pol.f < best) {
    best = pol.f;
    best_x = pol.x;
  }
  est.eta_star = split.full(best_x);
  est.primal_value = best;
  est.iterations = lb.iterations + pol.iterations;
  est.primal_converged = pol.converged;
  est.wall_time = seconds_since(t0);
  return est;
}

CapacityEstimate run_dual(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts,
                          const std::vector<Field>& columns, const Field& w) {
  const auto t0 = Clock::now();
  CapacityEstimate est;
  est.label = K.label;
  est.n = ks.grid().n;
  if (K.empty()) {
    est.dual_converged = true;
    est.wall_time = seconds_since(t0);
    return est;
  }
  const int m = static_cast<int>(columns.size());
  Eigen::MatrixXd C(columns[0].size(), m);
  for (int i = 0; i < m; ++i) C.col(i) = columns[i];
  if (m == 1) est.dual_closed_form = 1.0 / luxemburg_norm(C.col(0), w, expo(), Side::P);

  Objective fg = [&](const Field& mass) {
    Field v = C * mass;
    return ObjectiveValue{luxemburg_norm(v, w, expo(), Side::P),
                          C.transpose() * luxemburg_subgradient(v, w, expo(), Side::P)};
  };
  Field start = Field::Constant(m, 1.0 / m);
  SearchResult r = projected_descent(fg, start, project_simplex, opts.dual_iterations, opts.tolerance);
  const double norm = r.f;
  est.dual_value = 1.0 / norm;
  for (int i = 0; i < m; ++i)
    if (r.x[i] > 0) est.mu_star.emplace_back(K.nodes[i], r.x[i] / norm);
  est.iterations = r.iterations;
  est.dual_converged = r.converged;
  est.wall_time = seconds_since(t0);
  return est;
}

}  // namespace

CompactSet interior_set(std::vector<int> nodes, std::string label) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return CompactSet{std::move(nodes), std::move(label), false};
}

CompactSet boundary_set(std::vector<int> nodes, std::string label) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return CompactSet{std::move(nodes), std::move(label), true};
}

ObjectiveValue interior_objective(const Field& eta, const KernelSet& ks) {
  const Grid& g = ks.grid();
  if (eta.size() != g.num_interior()) throw GridMismatch("test function has wrong size");
  Field f = ks.laplacian() * eta;
  OrliczValue o = orlicz_norm(f, g.weights(WeightKind::Lebesgue), expo(), Side::Pstar);
  return {o.value, ks.laplacian() * o.gradient};
}

Field boundary_operator(const Field& eta, const KernelSet& ks) {
  if (eta.size() != ks.grid().num_boundary()) throw GridMismatch("boundary test function has wrong size");
  return ks.apply_laplacian(ks.rho_star().cwiseProduct(ks.poisson_apply(eta)));
}

ObjectiveValue boundary_objective(const Field& eta, const KernelSet& ks) {
  const Grid& g = ks.grid();
  Field f = boundary_operator(eta, ks).cwiseQuotient(g.rho);
  OrliczValue o = orlicz_norm(f, g.weights(WeightKind::Rho), expo(), Side::Pstar);
  // adjoint of eta -> Delta(rho* P[eta]) / rho
  Field y = ks.rho_star().cwiseProduct(ks.laplacian() * o.gradient.cwiseQuotient(g.rho));
  Field z = ks.solve(y);
  Field grad = Field::Zero(g.num_boundary());
  const double ih2 = 1.0 / (g.h * g.h);
  for (int b = 0; b < g.num_boundary(); ++b)
    for (int q : g.boundary[b].neighbors) grad[b] -= z[q] * ih2;
  return {o.value, grad};
}

CapacityEstimate primal_interior(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts) {
  const Grid& g = ks.grid();
  check_interior_set(K, g);
  std::vector<int> ones;
  Field warm = Field::Zero(g.num_interior());
  if (!K.empty()) {
    ones = interior_neighbourhood(K, g, opts.rings);
    Field rhs = Field::Zero(g.num_interior());
    for (int k : ones) rhs[k] = 1.0;
    Field pot = ks.solve(rhs);
    double lo = 1e300;
    for (int k : ones) lo = std::min(lo, pot[k]);
    warm = (pot / lo).cwiseMin(1.0);
  }
  CapacityEstimate est = run_primal(K, ks, opts, ones, g.num_interior(), warm,
                                    [&](const Field& e) { return interior_objective(e, ks); });
  if (!K.empty()) {
    Field f = ks.laplacian() * est.eta_star;
    est.primal_luxemburg = luxemburg_norm(f, g.weights(WeightKind::Lebesgue), expo(), Side::Pstar);
    est.primal_maximal = maximal_function(f, g).sum() * g.cell_measure();
  }
  return est;
}

CapacityEstimate dual_interior(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts) {
  const Grid& g = ks.grid();
  check_interior_set(K, g);
  std::vector<Field> cols;
  for (int k : K.nodes) {
    InteriorMeasure mu;
    mu.atoms = {{k, 1.0}};
    cols.push_back(green_potential(ks, mu));
  }
  return run_dual(K, ks, opts, cols, g.weights(WeightKind::Lebesgue));
}

CapacityEstimate primal_boundary(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts) {
  const Grid& g = ks.grid();
  check_boundary_set(K, g);
  std::vector<int> ones = K.empty() ? std::vector<int>{} : g.dilate_boundary(K.nodes, opts.rings);
  Field warm = Field::Zero(g.num_boundary());
  for (int b : ones) warm[b] = 1.0;
  CapacityEstimate est = run_primal(K, ks, opts, ones, g.num_boundary(), warm,
                                    [&](const Field& e) { return boundary_objective(e, ks); });
  if (!K.empty()) {
    Field f = boundary_operator(est.eta_star, ks).cwiseQuotient(g.rho);
    est.primal_luxemburg = luxemburg_norm(f, g.weights(WeightKind::Rho), expo(), Side::Pstar);
  }
  return est;
}

CapacityEstimate dual_boundary(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts) {
  const Grid& g = ks.grid();
  check_boundary_set(K, g);
  std::vector<Field> cols;
  for (int b : K.nodes) {
    BoundaryMeasure mu;
    mu.atoms = {{b, 1.0}};
    cols.push_back(poisson_potential(ks, mu));
  }
  return run_dual(K, ks, opts, cols, g.weights(WeightKind::Rho));
}

CapacityEstimate estimate_capacity(const CompactSet& K, const KernelSet& ks, const CapacityOptions& opts) {
  CapacityEstimate p = K.on_boundary ? primal_boundary(K, ks, opts) : primal_interior(K, ks, opts);
  CapacityEstimate d = K.on_boundary ? dual_boundary(K, ks, opts) : dual_interior(K, ks, opts);
  p.dual_value = d.dual_value;
  p.dual_closed_form = d.dual_closed_form;
  p.mu_star = d.mu_star;
  p.dual_converged = d.dual_converged;
  p.iterations += d.iterations;
  p.wall_time += d.wall_time;
  p.gap = p.primal_value - p.dual_value;
  return p;
}

Pairing pairing(const Field& eta, const BoundaryMeasure& mu, const KernelSet& ks) {
  const Grid& g = ks.grid();
  if (eta.size() != g.num_boundary()) throw GridMismatch("boundary test function has wrong size");
  Field dens = mu.to_density(g);
  Pairing out;
  if (eta.cwiseAbs().maxCoeff() == 0.0 || dens.cwiseAbs().maxCoeff() == 0.0) return out;
  Field Pmu = ks.poisson_apply(dens);
  Field zeta = ks.rho_star().cwiseProduct(ks.poisson_apply(eta));
  Field L = ks.apply_laplacian(zeta);
  out.a = -Pmu.dot(L) * g.cell_measure();
  const double scale = g.cell_measure() / (g.h * g.h);
  double b = 0.0;
  for (int k = 0; k < g.num_boundary(); ++k) {
    double s = 0.0;
    for (int q : g.boundary[k].neighbors) s += zeta[q];
    b += dens[k] * s;
  }
  out.b = b * scale;
  Field w = g.weights(WeightKind::Rho);
  out.holder_bound = luxemburg_norm(Pmu, w, expo(), Side::P) *
                     orlicz_norm(L.cwiseQuotient(g.rho), w, expo(), Side::Pstar).value;
  return out;
}

ChebyshevReport chebyshev_bound(const Field& eta, double lam, const KernelSet& ks, double slack,
                                const CapacityOptions& opts) {
  if (!(lam > 0)) throw BadLambda("lambda must be positive");
  const Grid& g = ks.grid();
  if (eta.size() != g.num_interior()) throw GridMismatch("test function has wrong size");
  ChebyshevReport r;
  r.norm = integrate(eta.cwiseAbs(), g, WeightKind::Lebesgue) + interior_objective(eta, ks).value;
  r.bound = r.norm / lam;
  std::vector<int> level;
  for (int k = 0; k < g.num_interior(); ++k)
    if (eta[k] >= lam) level.push_back(k);
  r.superlevel = interior_set(level, "superlevel");
  r.primal = primal_interior(r.superlevel, ks, opts).primal_value;
  r.holds = r.primal <= r.bound + slack;
  return r;
}

std::pair<double, double> weak_l1_hessian(const Field& eta, const KernelSet& ks) {
  const Grid& g = ks.grid();
  if (eta.size() != g.num_interior()) throw GridMismatch("test function has wrong size");
  if (eta.cwiseAbs().maxCoeff() == 0.0) return {0.0, 0.0};
  auto at = [&](int i, int j) {
    int q = g.interior_at(i, j);
    return q >= 0 ? eta[q] : 0.0;
  };
  const double ih2 = 1.0 / (g.h * g.h);
  std::vector<double> mag(g.num_interior());
  for (int k = 0; k < g.num_interior(); ++k) {
    auto [i, j] = g.lattice_ij(g.interior_lattice[k]);
    double xx = (at(i + 1, j) - 2 * eta[k] + at(i - 1, j)) * ih2;
    if (g.dim == 1) {
      mag[k] = std::abs(xx);
      continue;
    }
    double yy = (at(i, j + 1) - 2 * eta[k] + at(i, j - 1)) * ih2;
    double xy = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) * 0.25 * ih2;
    mag[k] = std::sqrt(xx * xx + yy * yy + 2 * xy * xy);
  }
  std::sort(mag.begin(), mag.end(), std::greater<>());
  double lhs = 0.0;
  for (size_t k = 0; k < mag.size(); ++k) lhs = std::max(lhs, mag[k] * (k + 1) * g.cell_measure());
  double rhs = llnl_norm(ks.laplacian() * eta, g, WeightKind::Lebesgue);
  return {lhs, rhs};
}

BmpReport bmp_functional(const CompactSet& K, const KernelSet& ks, int iterations, int rings) {
  const Grid& g = ks.grid();
  check_interior_set(K, g);
  BmpReport rep;
  rep.eta = Field::Zero(g.num_interior());
  if (K.empty()) return rep;
  std::vector<int> ones = interior_neighbourhood(K, g, rings);
  Split split = make_split(g.num_interior(), ones);
  const double cell = g.cell_measure();
  auto value = [&](const Field& e, Field* grad) {
    Field L = ks.laplacian() * e;
    if (grad) *grad = split.restrict(ks.laplacian() * (L.array().sign().matrix() + 2.0 * e) * cell);
    return (L.cwiseAbs().sum() + e.dot(L)) * cell;
  };
  Field x = Field::Zero(split.free.size());
  Field grad;
  double best = value(split.full(x), &grad);
  Field best_x = x;
  for (int t = 1; t <= iterations; ++t) {
    double gmax = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    if (gmax == 0.0) break;
    x -= (0.5 / std::sqrt(static_cast<double>(t))) * grad / gmax;
    clamp01(x);
    double v = value(split.full(x), &grad);
    if (v < best) {
      best = v;
      best_x = x;
    }
    rep.iterations = t;
  }
  rep.value = best;
  rep.eta = split.full(best_x);
  return rep;
}

void write_capacity_csv_header(std::ostream& os) {
  os << "label,n,primal,dual,gap,iterations,wall_time\n";
}

void write_capacity_csv_row(std::ostream& os, const CapacityEstimate& e) {
  os.precision(17);
  os << e.label << ',' << e.n << ',' << e.primal_value << ',' << e.dual_value << ',' << e.gap << ','
     << e.iterations << ',' << e.wall_time << '\n';
}

}  // namespace expcap
