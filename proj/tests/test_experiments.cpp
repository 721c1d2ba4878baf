#include <cmath>
#include <sstream>

#include "doctest.h"
#include "expcap/errors.hpp"
#include "expcap/experiments.hpp"

using namespace expcap;

TEST_CASE("table and number formatting") {
  CHECK(fmt(0.1) == "0.1");
  CHECK(fmt(3) == "3");
  CHECK(std::stod(fmt(M_PI)) == M_PI);
  Table t;
  t.header = {"a", "b"};
  t.add({"1", "2"});
  CHECK_THROWS_AS(t.add({"1"}), std::invalid_argument);
  std::ostringstream os;
  t.write(os);
  CHECK(os.str() == "a,b\n1,2\n");
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.ladder = {64, 32};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.ladder = {32, 64};
  cfg.mass = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("target sets and cutoffs") {
  Grid g = build_grid(Shape::Square, 16);
  CHECK(target_set(g, 0.5, 0.5, 0).empty());
  CHECK(target_set(g, 0.5, 0.5, 1).nodes.size() == 1);
  CHECK(target_set(g, 0.5, 0.5, 3).nodes.size() == 3);
  CHECK(target_set(g, 0.5, 0.5, 5).nodes.size() == 5);
  CHECK_THROWS(target_set(g, 0.5, 0.5, 2));
  Field c = cutoff(g, 0.5, 0.5, 0.3);
  CHECK(c.maxCoeff() == 1.0);
  CHECK(c.minCoeff() == 0.0);
  Field b = boundary_cutoff(g, 0.5, 0.0, 0.3);
  CHECK(b.size() == g.num_boundary());
  CHECK(b[g.nearest_boundary(0.5, 0.0)] == 1.0);
}

TEST_CASE("threshold experiment on a short ladder") {
  ExperimentConfig cfg;
  cfg.ladder = {16, 32, 64};
  auto r = run_removability_threshold(cfg);
  CHECK(r.lower < r.m_star);
  CHECK(r.m_star < r.upper);
  CHECK(r.monotone);
  cfg.masses = {1, 2, 3};
  CHECK_THROWS_AS(run_removability_threshold(cfg), LadderTooCoarse);
  cfg.shape = Shape::Interval;
  CHECK_THROWS_AS(run_removability_threshold(cfg), std::invalid_argument);
}

TEST_CASE("moderate extension verdicts") {
  ExperimentConfig cfg;
  cfg.shape = Shape::Square;
  cfg.n = 64;
  CHECK(run_moderate_extension(cfg).verdict == Extension::Extends);
  cfg.source_mass = 20;
  CHECK(run_moderate_extension(cfg).verdict == Extension::Obstructed);
  cfg.radii = {0.4, 0.2};
  CHECK_THROWS_AS(run_moderate_extension(cfg), LadderTooCoarse);
  CHECK(to_string(Extension::Extends) == "EXTENDS");
  CHECK(to_string(Extension::Obstructed) == "OBSTRUCTED");
}

TEST_CASE("est integral") {
  KernelSet ks = assemble(build_grid(Shape::Square, 16));
  CHECK(est_integral(Field::Zero(ks.grid().num_boundary()), ks) == 0.0);
  CHECK(est_integral(Field::Ones(ks.grid().num_boundary()), ks) > 0.0);
}
