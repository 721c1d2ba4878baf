#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "expcap/errors.hpp"
#include "expcap/grid.hpp"
#include "expcap/orlicz.hpp"

using namespace expcap;

namespace {

// maximal function by enumerating every cube of the lattice box [lo, hi)^2 (cell indices)
Field brute_maximal(const Field& f, const Grid& g, int lo, int hi) {
  Field M = Field::Zero(g.num_interior());
  for (int k = 0; k < g.num_interior(); ++k) {
    auto [xi, xj] = g.lattice_ij(g.interior_lattice[k]);
    for (int s = 1; s <= hi - lo; ++s)
      for (int p = lo; p + s <= hi; ++p)
        for (int q = lo; q + s <= hi; ++q) {
          if (xi < p || xi >= p + s || xj < q || xj >= q + s) continue;
          double sum = 0;
          for (int t = 0; t < g.num_interior(); ++t) {
            auto [a, b] = g.lattice_ij(g.interior_lattice[t]);
            if (a >= p && a < p + s && b >= q && b < q + s) sum += std::abs(f[t]);
          }
          M[k] = std::max(M[k], sum / (s * s));
        }
  }
  return M;
}

}  // namespace

TEST_CASE("interval grid") {
  Grid g = build_grid(Shape::Interval, 3);
  REQUIRE(g.num_interior() == 3);
  CHECK(g.x[0] == doctest::Approx(0.25));
  CHECK(g.x[1] == doctest::Approx(0.5));
  CHECK(g.x[2] == doctest::Approx(0.75));
  CHECK(g.rho[0] == doctest::Approx(0.25));
  CHECK(g.rho[1] == doctest::Approx(0.5));
  CHECK(g.rho[2] == doctest::Approx(0.25));
  CHECK(g.num_boundary() == 2);
  CHECK(g.boundary[0].di == -1);
  CHECK(g.boundary[1].di == 1);
  CHECK_THROWS_AS(build_grid(Shape::Square, 2), TooCoarse);
}

TEST_CASE("square and disk grids") {
  Grid s = build_grid(Shape::Square, 31);
  CHECK(s.rho.maxCoeff() == doctest::Approx(0.5));
  CHECK(s.num_boundary() == 4 * 31);
  CHECK(s.rho[s.nearest_interior(0.5, 0.5)] == doctest::Approx(0.5));

  Grid d = build_grid(Shape::Disk, 64);
  double expect = M_PI * std::pow(0.5 / d.h, 2);
  CHECK(std::abs(d.num_interior() - expect) / expect < 0.03);

  for (const Grid* g : {&s, &d}) {
    CHECK(g->rho.minCoeff() > 0);
    for (int k = 0; k < g->num_interior(); ++k) {
      auto [i, j] = g->lattice_ij(g->interior_lattice[k]);
      int q = g->interior_at(i + 1, j);
      if (q >= 0) CHECK(std::abs(g->rho[k] - g->rho[q]) <= g->h + 1e-14);
      q = g->interior_at(i, j + 1);
      if (q >= 0) CHECK(std::abs(g->rho[k] - g->rho[q]) <= g->h + 1e-14);
    }
    for (const auto& b : g->boundary) {
      CHECK(g->lattice_interior[b.lattice] < 0);
      CHECK(b.inner >= 0);
      CHECK(std::abs(b.di) + std::abs(b.dj) == 1);
    }
  }
}

TEST_CASE("maximal function") {
  Grid g = build_grid(Shape::Square, 6);
  const int N = g.num_interior();
  Field c = Field::Constant(N, 2.5);
  CHECK((maximal_function(c, g) - c).cwiseAbs().maxCoeff() < 1e-14);

  Field spike = Field::Zero(N);
  spike[g.interior_at(2, 3)] = 1.0 / g.cell_measure();
  Field M = maximal_function(spike, g);
  Field B = brute_maximal(spike, g, -1, g.nx + 1);
  CHECK((M - B).cwiseAbs().maxCoeff() < 1e-10 * B.maxCoeff());

  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(-1, 1);
  Field f(N), h(N);
  for (int i = 0; i < N; ++i) {
    f[i] = U(rng);
    h[i] = U(rng);
  }
  Field Mf = maximal_function(f, g);
  CHECK((Mf - brute_maximal(f, g, -1, g.nx + 1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Mf - f.cwiseAbs()).minCoeff() >= -1e-15);
  CHECK((maximal_function(-3.0 * f, g) - 3.0 * Mf).cwiseAbs().maxCoeff() < 1e-12);
  Field sum = maximal_function(f + h, g);
  CHECK((Mf + maximal_function(h, g) - sum).minCoeff() >= -1e-12);

  // a smaller cube family never gives more
  Field fa = f.cwiseAbs();
  Field inner = brute_maximal(fa, g, 0, g.nx);
  CHECK((maximal_function(fa, g) - inner).minCoeff() >= -1e-14);

  Grid line = build_grid(Shape::Interval, 9);
  Field one = Field::Zero(9);
  one[4] = 1.0;
  Field Ml = maximal_function(one, line);
  CHECK(Ml[4] == doctest::Approx(1.0));
  CHECK(Ml[0] == doctest::Approx(1.0 / 5.0));  // interval covering lattice 1..5
}

TEST_CASE("llnl norm against the Luxemburg P* norm") {
  Grid g = build_grid(Shape::Square, 32);
  const int N = g.num_interior();
  CHECK(llnl_norm(Field::Zero(N), g, WeightKind::Rho) == 0.0);
  CHECK(llnl_norm(Field::Ones(N), g, WeightKind::Lebesgue) >= g.total_weight(WeightKind::Lebesgue));
  NFunction ex = exponential_pair();
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> U(-1, 1);
  double lo = 1e300, hi = 0;
  for (int t = 0; t < 50; ++t) {
    Field f(N);
    double scale = std::pow(10.0, 2 * U(rng));
    int cx = static_cast<int>(16 + 12 * U(rng)), cy = static_cast<int>(16 + 12 * U(rng));
    double width = 0.02 + 0.2 * (U(rng) + 1);
    for (int k = 0; k < N; ++k) {
      double r2 = std::pow(g.x[k] - cx * g.h, 2) + std::pow(g.y[k] - cy * g.h, 2);
      f[k] = scale * (std::exp(-r2 / (width * width)) + 0.1 * U(rng));
    }
    double ratio = llnl_norm(f, g, WeightKind::Rho) / luxemburg_norm(f, g.weights(WeightKind::Rho), ex, Side::Pstar);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  double c_eq = std::max(hi, 1.0 / lo);
  MESSAGE("llnl / Luxemburg-P* ratio range [" << lo << ", " << hi << "], c_eq = " << c_eq);
  CHECK(lo > 0);
  CHECK(c_eq < 50);
}

TEST_CASE("integration") {
  for (int n : {8, 16, 32}) {
    Grid g = build_grid(Shape::Square, n);
    double v = integrate(Field::Ones(g.num_interior()), g, WeightKind::Lebesgue);
    CHECK(v == doctest::Approx(std::pow(n / (n + 1.0), 2)).epsilon(1e-13));
  }
  double prev = 0;
  for (int n : {63, 127, 255}) {
    Grid g = build_grid(Shape::Interval, n);
    double err = std::abs(integrate(Field::Ones(n), g, WeightKind::Rho) - 0.25);
    CHECK(err < 1.0 / n);
    if (prev > 0) CHECK(err < prev);
    prev = err;
  }
  // order h^2 for a smooth integrand vanishing on the boundary
  std::vector<double> errs;
  for (int n : {15, 31, 63}) {
    Grid g = build_grid(Shape::Square, n);
    Field f(g.num_interior());
    for (int k = 0; k < g.num_interior(); ++k)
      f[k] = std::sin(M_PI * g.x[k]) * std::sin(M_PI * g.y[k]) * std::exp(g.x[k]);
    double exact = (M_PI * (std::exp(1.0) + 1.0) / (1.0 + M_PI * M_PI)) * (2.0 / M_PI);
    errs.push_back(std::abs(integrate(f, g, WeightKind::Lebesgue) - exact));
  }
  CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(errs[1] / errs[2] == doctest::Approx(4.0).epsilon(0.1));

  Grid g = build_grid(Shape::Disk, 20);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(-1, 1);
  Field a(g.num_interior()), b(g.num_interior());
  for (int i = 0; i < a.size(); ++i) {
    a[i] = U(rng);
    b[i] = U(rng);
  }
  double lin = integrate(2.0 * a - 3.0 * b, g, WeightKind::Rho);
  CHECK(std::abs(lin - 2.0 * integrate(a, g, WeightKind::Rho) + 3.0 * integrate(b, g, WeightKind::Rho)) < 1e-12);
}

TEST_CASE("field csv round trip") {
  Grid g = build_grid(Shape::Disk, 10);
  Field f = g.rho * 3.0;
  std::stringstream ss;
  write_field_csv(ss, f, g, WeightKind::Rho);
  auto back = read_field_csv(ss);
  CHECK(back.shape == Shape::Disk);
  CHECK(back.n == 10);
  CHECK(back.kind == WeightKind::Rho);
  CHECK(back.h == doctest::Approx(g.h));
  CHECK((back.values - f).cwiseAbs().maxCoeff() < 1e-15);
}
