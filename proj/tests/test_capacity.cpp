#include <array>
#include <cmath>
#include <random>

#include "doctest.h"
#include "expcap/capacity.hpp"
#include "expcap/errors.hpp"

using namespace expcap;

namespace {

int centre(const Grid& g) { return g.nearest_interior(0.5, 0.5); }

std::vector<int> cluster(const Grid& g, int c) {
  auto [i, j] = g.lattice_ij(g.interior_lattice[c]);
  return {c, g.interior_at(i + 1, j), g.interior_at(i, j + 1)};
}

Field bump(const Grid& g, double cx, double cy, double r) {
  Field e = Field::Zero(g.num_interior());
  for (int k = 0; k < g.num_interior(); ++k) {
    double dx = (g.x[k] - cx) / r, dy = (g.y[k] - cy) / r;
    if (std::abs(dx) < 1 && std::abs(dy) < 1)
      e[k] = std::pow(std::cos(M_PI * dx / 2), 2) * std::pow(std::cos(M_PI * dy / 2), 2);
  }
  return e;
}

}  // namespace

TEST_CASE("objective gradients match finite differences") {
  KernelSet ks = assemble(build_grid(Shape::Square, 16));
  const Grid& g = ks.grid();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0, 1);
  for (int t = 0; t < 5; ++t) {
    Field e(g.num_interior()), d(g.num_interior());
    for (int k = 0; k < e.size(); ++k) {
      e[k] = U(rng);
      d[k] = U(rng) - 0.5;
    }
    auto v = interior_objective(e, ks);
    const double s = 1e-6;
    double fd = (interior_objective(e + s * d, ks).value - interior_objective(e - s * d, ks).value) / (2 * s);
    CHECK(std::abs(fd - v.gradient.dot(d)) < 1e-5 * std::abs(fd) + 1e-12);

    Field eb(g.num_boundary()), db(g.num_boundary());
    for (int k = 0; k < eb.size(); ++k) {
      eb[k] = U(rng);
      db[k] = U(rng) - 0.5;
    }
    auto vb = boundary_objective(eb, ks);
    double fdb = (boundary_objective(eb + s * db, ks).value - boundary_objective(eb - s * db, ks).value) / (2 * s);
    CHECK(std::abs(fdb - vb.gradient.dot(db)) < 1e-5 * std::abs(fdb) + 1e-12);
  }
}

TEST_CASE("interior capacity") {
  KernelSet ks = assemble(build_grid(Shape::Square, 32));
  const Grid& g = ks.grid();
  const int c = centre(g);

  auto empty = estimate_capacity(interior_set({}), ks);
  CHECK(empty.primal_value == 0.0);
  CHECK(empty.dual_value == 0.0);

  auto one = estimate_capacity(interior_set({c}, "single"), ks);
  MESSAGE("single: primal " << one.primal_value << " dual " << one.dual_value << " lux " << one.primal_luxemburg
                            << " maximal " << one.primal_maximal << " iters " << one.iterations << " t "
                            << one.wall_time);
  CHECK(one.primal_value > 0);
  CHECK(one.dual_value <= one.primal_value + 1e-8);
  CHECK(one.dual_value == doctest::Approx(one.dual_closed_form).epsilon(1e-10));
  CHECK(one.relative_gap() < 0.2);
  CHECK(one.eta_star.minCoeff() >= 0.0);
  CHECK(one.eta_star.maxCoeff() <= 1.0);
  for (int k : g.dilate({c})) CHECK(one.eta_star[k] == 1.0);

  auto three = estimate_capacity(interior_set(cluster(g, c), "cluster"), ks);
  MESSAGE("cluster: primal " << three.primal_value << " dual " << three.dual_value << " t " << three.wall_time);
  CHECK(three.dual_value <= three.primal_value + 1e-8);
  CHECK(three.primal_value >= one.primal_value - 1e-8);
  CHECK(three.dual_value >= one.dual_value - 1e-8);
  double mass = 0;
  for (auto [k, m] : three.mu_star) mass += m;
  CHECK(mass == doctest::Approx(three.dual_value));

  CHECK_THROWS_AS(primal_interior(interior_set({0}), ks), Infeasible);
  CHECK_THROWS_AS(primal_interior(boundary_set({0}), ks), SupportError);
}

TEST_CASE("interior capacity under refinement") {
  KernelSet k32 = assemble(build_grid(Shape::Square, 31));
  KernelSet k64 = assemble(build_grid(Shape::Square, 63));
  CapacityOptions o2;
  o2.rings = 2;
  auto a = primal_interior(interior_set({centre(k32.grid())}), k32);
  auto b = primal_interior(interior_set({centre(k64.grid())}), k64, o2);
  MESSAGE("refinement: n=31 " << a.primal_value << " n=63 (2 rings) " << b.primal_value << " t " << b.wall_time);
  CHECK(std::abs(a.primal_value - b.primal_value) < 0.01 * a.primal_value);
}

TEST_CASE("boundary capacity") {
  KernelSet ks = assemble(build_grid(Shape::Square, 32));
  const Grid& g = ks.grid();
  int b0 = g.nearest_boundary(0.5, 0.0);

  auto empty = estimate_capacity(boundary_set({}), ks);
  CHECK(empty.primal_value == 0.0);
  CHECK(empty.dual_value == 0.0);

  auto one = estimate_capacity(boundary_set({b0}, "bsingle"), ks);
  MESSAGE("boundary single: primal " << one.primal_value << " dual " << one.dual_value << " t " << one.wall_time);
  CHECK(one.dual_value <= one.primal_value + 1e-8);
  CHECK(one.dual_value == doctest::Approx(one.dual_closed_form).epsilon(1e-10));

  auto seg = estimate_capacity(boundary_set(g.dilate_boundary({b0}), "bseg"), ks);
  MESSAGE("boundary segment: primal " << seg.primal_value << " dual " << seg.dual_value << " t " << seg.wall_time);
  CHECK(seg.dual_value <= seg.primal_value + 1e-8);
  CHECK(seg.primal_value >= one.primal_value - 1e-8);

  std::vector<int> all(g.num_boundary());
  for (int b = 0; b < g.num_boundary(); ++b) all[b] = b;
  auto full = primal_boundary(boundary_set(all), ks);
  CHECK(full.eta_star.minCoeff() == 1.0);
  CHECK(full.primal_value == doctest::Approx(boundary_objective(Field::Ones(g.num_boundary()), ks).value));
  CHECK(full.primal_value >= seg.primal_value - 1e-8);
}

TEST_CASE("boundary pairing") {
  KernelSet ks = assemble(build_grid(Shape::Square, 32));
  const Grid& g = ks.grid();
  BoundaryMeasure zero;
  auto p0 = pairing(Field::Ones(g.num_boundary()), zero, ks);
  CHECK(p0.a == 0.0);
  CHECK(p0.b == 0.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int t = 0; t < 10; ++t) {
    Field eta(g.num_boundary());
    BoundaryMeasure mu;
    mu.density = Field(g.num_boundary());
    for (int b = 0; b < g.num_boundary(); ++b) {
      eta[b] = U(rng);
      mu.density[b] = U(rng);
    }
    mu.atoms = {{static_cast<int>(U(rng) * g.num_boundary()), U(rng)}};
    auto p = pairing(eta, mu, ks);
    CHECK(std::abs(p.a - p.b) < 1e-9 * std::max(1.0, std::abs(p.a)));
    CHECK(std::abs(p.a) <= p.holder_bound);
  }
  auto pz = pairing(Field::Zero(g.num_boundary()), BoundaryMeasure{{{0, 1.0}}, {}}, ks);
  CHECK(pz.a == 0.0);
}

TEST_CASE("Chebyshev bound") {
  KernelSet ks = assemble(build_grid(Shape::Square, 32));
  const Grid& g = ks.grid();
  CHECK_THROWS_AS(chebyshev_bound(Field::Zero(g.num_interior()), 0.0, ks), BadLambda);
  Field eta = 3.0 * bump(g, 0.5, 0.5, 0.3);
  for (double lam : {0.5, 1.0, 2.0}) {
    auto r = chebyshev_bound(eta, lam, ks);
    MESSAGE("lambda " << lam << " bound " << r.bound << " primal " << r.primal);
    CHECK(r.holds);
  }
  auto far = chebyshev_bound(eta, 1e6, ks);
  CHECK(far.superlevel.empty());
  CHECK(far.bound < 1e-3);
}

TEST_CASE("weak L1 Hessian") {
  auto z = weak_l1_hessian(Field::Zero(32 * 32), assemble(build_grid(Shape::Square, 32)));
  CHECK(z.first == 0.0);
  CHECK(z.second == 0.0);
  std::vector<double> ratio;
  for (int n : {32, 64}) {
    KernelSet ks = assemble(build_grid(Shape::Square, n));
    auto [l, r] = weak_l1_hessian(bump(ks.grid(), 0.5, 0.5, 0.25), ks);
    ratio.push_back(l / r);
  }
  CHECK(ratio[1] == doctest::Approx(ratio[0]).epsilon(0.2));

  std::mt19937 rng(29);
  std::uniform_real_distribution<double> C(0.3, 0.7), R(0.1, 0.25), A(0.5, 3.0);
  std::vector<std::array<double, 4>> corpus(30);
  for (auto& b : corpus) b = {C(rng), C(rng), R(rng), A(rng)};
  std::vector<double> worst;
  for (int n : {32, 64}) {
    KernelSet ks = assemble(build_grid(Shape::Square, n));
    double m = 0;
    for (const auto& b : corpus) {
      auto [l, r] = weak_l1_hessian(b[3] * bump(ks.grid(), b[0], b[1], b[2]), ks);
      m = std::max(m, l / r);
    }
    worst.push_back(m);
  }
  MESSAGE("weak L1 corpus max ratio: n=32 " << worst[0] << " n=64 " << worst[1]);
  CHECK(std::isfinite(worst[1]));
  CHECK(worst[1] <= 1.2 * worst[0]);
}

TEST_CASE("bmp functional") {
  KernelSet ks = assemble(build_grid(Shape::Square, 16));
  const Grid& g = ks.grid();
  CHECK(bmp_functional(interior_set({}), ks).value == 0.0);
  auto a = bmp_functional(interior_set({centre(g)}), ks);
  auto b = bmp_functional(interior_set(cluster(g, centre(g))), ks);
  CHECK(a.value > 0);
  CHECK(b.value >= a.value - 1e-6);
  CHECK(a.eta.maxCoeff() <= 1.0);
}
