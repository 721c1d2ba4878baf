#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "expcap/experiments.hpp"

using namespace expcap;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* title, double limit, const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = o.ok && t < limit;
  if (!ok) ++failures;
  std::printf("criterion %2d %s  %-32s %7.2f s (limit %g s)  %s\n", id, ok ? "PASS" : "FAIL", title, t, limit,
              o.detail.c_str());
  std::fflush(stdout);
}

Field random_field(std::mt19937& rng, int n, double a) {
  std::uniform_real_distribution<double> U(-a, a);
  Field f(n);
  for (int i = 0; i < n; ++i) f[i] = U(rng);
  return f;
}

Field random_weights(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> U(0.1, 1.0);
  Field w(n);
  for (int i = 0; i < n; ++i) w[i] = U(rng) / n;
  return w;
}

BoundaryMeasure constant_boundary(const Grid& g, double c) {
  BoundaryMeasure mu;
  mu.density = Field::Constant(g.num_boundary(), c);
  return mu;
}

Outcome orlicz_algebra() {
  NFunction nf = exponential_pair();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-10, 10), A(-1000, 1000);
  double worst_gap = 0, worst_eq = 0;
  int sandwich_bad = 0;
  for (int i = 0; i < 10000; ++i) worst_gap = std::min(worst_gap, young_gap(U(rng), U(rng)));
  for (double x = -10; x <= 10; x += 0.01) worst_eq = std::max(worst_eq, std::abs(young_gap(x, nf.density_p(x))));
  for (int i = 0; i < 10000; ++i) {
    double a = A(rng);
    auto s = pstar_sandwich(a);
    if (!(s.lo <= s.mid * (1 + 1e-14) && s.mid <= s.hi * (1 + 1e-14))) ++sandwich_bad;
  }
  std::ostringstream d;
  d << "min gap " << worst_gap << ", equality error " << worst_eq << ", sandwich failures " << sandwich_bad;
  return {worst_gap >= -1e-12 && worst_eq < 1e-9 && sandwich_bad == 0, d.str()};
}

Outcome luxemburg() {
  NFunction ex = exponential_pair(), qd = quadratic_pair();
  std::mt19937 rng(11);
  double quad = 0, homog = 0, tri = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 40;
    Field f = random_field(rng, n, 3.0), g = random_field(rng, n, 3.0), w = random_weights(rng, n);
    double l2 = std::sqrt(f.cwiseProduct(f).dot(w));
    quad = std::max(quad, std::abs(luxemburg_norm(f, w, qd, Side::P) - l2 / std::sqrt(2.0)) / l2);
    for (Side s : {Side::P, Side::Pstar}) {
      double nf = luxemburg_norm(f, w, ex, s), ng = luxemburg_norm(g, w, ex, s);
      double c = -0.5 - 3.0 * t / 100.0;
      homog = std::max(homog, std::abs(luxemburg_norm(c * f, w, ex, s) - std::abs(c) * nf) / (std::abs(c) * nf));
      tri = std::max(tri, luxemburg_norm(f + g, w, ex, s) - nf - ng);
    }
  }
  std::ostringstream d;
  d << "quadratic rel error " << quad << ", homogeneity " << homog << ", triangle excess " << tri;
  return {quad < 1e-10 && homog < 1e-9 && tri < 1e-9, d.str()};
}

Outcome subgradient() {
  NFunction ex = exponential_pair();
  std::mt19937 rng(3);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    Side s = t % 2 ? Side::Pstar : Side::P;
    const int n = 25;
    Field f = random_field(rng, n, 2.0), d = random_field(rng, n, 1.0), w = random_weights(rng, n);
    double gd = luxemburg_subgradient(f, w, ex, s).dot(d);
    const double step = 1e-5;
    double fd = (luxemburg_norm(f + step * d, w, ex, s) - luxemburg_norm(f - step * d, w, ex, s)) / (2 * step);
    worst = std::max(worst, std::abs(fd - gd) / std::max(std::abs(gd), 1e-3));
  }
  std::ostringstream d;
  d << "max relative deviation " << worst;
  return {worst < 1e-6, d.str()};
}

Outcome kernels() {
  double green_err = 0, zeta_err = 0;
  for (int n = 3; n <= 255; ++n) {
    KernelSet ks = assemble(build_grid(Shape::Interval, n));
    const Grid& g = ks.grid();
    Eigen::MatrixXd G = green_matrix(ks);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double x = g.x[i], y = g.x[j];
        green_err = std::max(green_err, std::abs(G(i, j) - (x <= y ? x * (1 - y) : y * (1 - x))));
      }
    for (int i = 0; i < n; ++i) zeta_err = std::max(zeta_err, std::abs(ks.zeta0()[i] - g.x[i] * (1 - g.x[i]) / 2));
  }
  KernelSet sq = assemble(build_grid(Shape::Square, 64));
  double lam_err = std::abs(sq.lambda() - 2 * M_PI * M_PI) / (2 * M_PI * M_PI);
  double part = (poisson_potential(sq, constant_boundary(sq.grid(), 1.0)).array() - 1.0).abs().maxCoeff();
  std::ostringstream d;
  d << "green " << green_err << ", zeta0 " << zeta_err << ", eigenvalue rel " << lam_err << ", partition " << part;
  return {green_err < 1e-12 && zeta_err < 1e-12 && lam_err < 0.01 && part < 1e-10, d.str()};
}

Outcome duality() {
  KernelSet ks = assemble(build_grid(Shape::Square, 32));
  const Grid& g = ks.grid();
  std::vector<CompactSet> sets = {target_set(g, 0.5, 0.5, 1), target_set(g, 0.5, 0.5, 3),
                                  target_set(g, 0.5, 0.5, 5)};
  int b0 = g.nearest_boundary(0.5, 0.0);
  sets.push_back(boundary_set({b0}, "boundary1"));
  sets.push_back(boundary_set(g.dilate_boundary({b0}, 1), "boundary3"));
  sets.push_back(boundary_set(g.dilate_boundary({b0}, 2), "boundary5"));
  bool ok = true;
  std::ostringstream d;
  for (const auto& K : sets) {
    CapacityEstimate e = estimate_capacity(K, ks);
    bool weak = e.dual_value <= e.primal_value + 1e-8;
    bool gap = e.relative_gap() <= 0.2;
    bool closed = e.dual_closed_form < 0 || std::abs(e.dual_value - e.dual_closed_form) <= 0.01 * e.dual_closed_form;
    ok = ok && weak && gap && closed;
    d << K.label << " gap " << std::round(1000 * e.relative_gap()) / 10 << "%" << (weak && gap && closed ? "" : "*")
      << "; ";
  }
  return {ok, d.str()};
}

Outcome threshold() {
  ExperimentConfig cfg;
  cfg.shape = Shape::Disk;
  cfg.ladder = {32, 64, 128};
  ThresholdResult r = run_removability_threshold(cfg);
  double rel = std::abs(r.m_star - 4 * M_PI) / (4 * M_PI);
  std::ostringstream d;
  d << "m* " << r.m_star << " in (" << r.lower << ", " << r.upper << "), deviation " << rel
    << (r.brackets_4pi ? ", brackets 4pi" : ", misses 4pi");
  return {r.pass && r.monotone && rel <= 0.15, d.str()};
}

Outcome theorem_a() {
  KernelSet ks = assemble(build_grid(Shape::Square, 32));
  const Grid& g = ks.grid();
  int b0 = g.nearest_boundary(0.5, 0.0);
  std::vector<BoundaryMeasure> specs;
  specs.push_back(constant_boundary(g, 1.0));
  BoundaryMeasure peaked;
  peaked.density = Field(g.num_boundary());
  for (int b = 0; b < g.num_boundary(); ++b)
    peaked.density[b] = 1.0 / std::max(std::hypot(g.bx[b] - g.bx[b0], g.by[b] - g.by[b0]), g.h);
  specs.push_back(peaked);
  BoundaryMeasure mixed = constant_boundary(g, 1.0);
  mixed.atoms = {{b0, 0.05}};
  specs.push_back(mixed);
  BoundaryMeasure wave;
  wave.density = Field(g.num_boundary());
  for (int b = 0; b < g.num_boundary(); ++b) wave.density[b] = 4 * std::pow(std::sin(M_PI * (g.bx[b] + g.by[b])), 2);
  specs.push_back(wave);
  BoundaryMeasure atoms;
  atoms.density = 2.0 * g.bx;
  atoms.atoms = {{g.nearest_boundary(0.25, 0.0), 0.03}, {g.nearest_boundary(0.0, 0.6), 0.03}};
  specs.push_back(atoms);

  double viol = 0, diff = 0;
  bool bound = true;
  for (const auto& mu : specs) {
    TheoremAReport r = theorem_a_scheme(mu, ks);
    viol = std::max(viol, r.max_violation);
    bound = bound && r.bound_ok;
    diff = std::max(diff, (r.final.u - solve_boundary(mu, ks).u).cwiseAbs().maxCoeff());
  }
  std::ostringstream d;
  d << "max violation " << viol << ", bound " << (bound ? "holds" : "fails") << ", saturated vs direct " << diff;
  return {viol < 1e-12 && bound && diff < 1e-10, d.str()};
}

Outcome keller_osserman() {
  KernelSet ks = assemble(build_grid(Shape::Square, 64));
  std::vector<double> D;
  for (double c : {2.0, 4.0, 8.0, 16.0})
    D.push_back(keller_osserman_check(solve_boundary(constant_boundary(ks.grid(), c), ks).u, ks.grid()));
  bool ok = true;
  for (size_t i = 2; i < D.size(); ++i) ok = ok && D[i] - D[i - 1] < D[i - 1] - D[i - 2];
  std::ostringstream d;
  d << "D(c) " << D[0] << " " << D[1] << " " << D[2] << " " << D[3];
  return {ok, d.str()};
}

Outcome theorem_b() {
  ExperimentConfig cfg;
  cfg.shape = Shape::Square;
  cfg.n = 32;
  TheoremBResult r = run_theorem_b_inequality(cfg);
  std::ostringstream d;
  d << "interior " << (r.interior_holds ? "holds" : "fails") << ", boundary " << (r.boundary_holds ? "holds" : "fails")
    << ", Fubini " << r.max_fubini;
  return {r.interior_holds && r.boundary_holds && r.max_fubini < 1e-9, d.str()};
}

Outcome weak_residuals() {
  std::vector<double> inner, outer;
  for (int n : {63, 127}) {
    KernelSet ks = assemble(build_grid(Shape::Disk, n));
    InteriorMeasure mu;
    mu.density = Field::Ones(ks.grid().num_interior());
    inner.push_back(weak_residual(solve_interior(mu, ks).u, mu, ks, disk_polynomial_tests(1.0)).max_abs);
  }
  for (int n : {31, 63}) {
    KernelSet ks = assemble(build_grid(Shape::Square, n));
    BoundaryMeasure mu = constant_boundary(ks.grid(), 1.0);
    outer.push_back(weak_residual(solve_boundary(mu, ks).u, mu, ks, square_polynomial_tests()).max_abs);
  }
  double ri = inner[1] / inner[0], rb = outer[1] / outer[0];
  std::ostringstream d;
  d << "interior ratio " << ri << ", boundary ratio " << rb;
  return {std::abs(ri - 0.5) <= 0.1 && std::abs(rb - 0.5) <= 0.1, d.str()};
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  run(1, "Orlicz algebra", 1, orlicz_algebra);
  run(2, "Luxemburg norm", 5, luxemburg);
  run(3, "subgradient", 10, subgradient);
  run(4, "kernel exactness", 30, kernels);
  run(5, "duality", 180, duality);
  run(6, "point-mass threshold", 120, threshold);
  run(7, "truncation scheme", 60, theorem_a);
  run(8, "Keller-Osserman surrogate", 60, keller_osserman);
  run(9, "vanishing inequality", 60, theorem_b);
  run(10, "weak residual convergence", 120, weak_residuals);
  double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("total %.1f s, %d failing\n", t, failures);
  return failures ? 1 : 0;
}
