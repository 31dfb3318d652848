#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "halfcar/ocp.hpp"
#include "test_util.hpp"

using namespace halfcar;

namespace {

HorizonRoad flat_horizon(int horizon, double height = 0.0) {
  HorizonRoad r;
  r.front_height = Eigen::VectorXd::Constant(horizon + 1, height);
  r.front_rate = Eigen::VectorXd::Zero(horizon + 1);
  r.rear_height = Eigen::VectorXd::Constant(horizon + 1, height);
  r.rear_rate = Eigen::VectorXd::Zero(horizon + 1);
  return r;
}

}  // namespace

TEST_CASE("nominal forces follow the static axle load formulas") {
  HalfCarParams p;
  const NominalForces f = nominal_forces(p);
  CHECK(f.front == doctest::Approx(3825.9).epsilon(1e-12));
  CHECK(f.rear == doctest::Approx(3825.9).epsilon(1e-12));

  p.a = 2.0;
  const NominalForces g = nominal_forces(p);
  CHECK(g.front == doctest::Approx(5101.2).epsilon(1e-12));
  CHECK(g.rear == doctest::Approx(2550.6).epsilon(1e-12));

  std::uint64_t rng = 3;
  for (int i = 0; i < 10; ++i) {
    HalfCarParams q;
    q.a = test::uniform(rng, 0.5, 2.0);
    q.b = test::uniform(rng, 0.5, 2.0);
    q.m3 = test::uniform(rng, 300.0, 1500.0);
    const NominalForces n = nominal_forces(q);
    CHECK(n.front + n.rear ==
          doctest::Approx(q.g * (q.m1 + q.m2 + q.m3)).epsilon(1e-12));
  }
}

TEST_CASE("the equilibrium start on a flat road costs nothing") {
  const OcpConfig cfg;
  const HalfCarParams p;
  const HalfCarState eq = static_equilibrium(p, 0.0);
  const HorizonRoad road = flat_horizon(cfg.horizon);
  std::uint64_t rng = 17;
  for (int i = 0; i < 3; ++i) {
    const DecisionVector z = test::random_decision(rng, cfg.horizon);
    CHECK(objective(cfg, p, eq, z, road) <= 1e-12);
  }
}

TEST_CASE("zero weights zero the objective") {
  OcpConfig cfg;
  cfg.mu_handling = 0.0;
  cfg.mu_comfort = 0.0;
  const HalfCarParams p;
  std::uint64_t rng = 23;
  const HalfCarState x0 = test::random_state(rng);
  const DecisionVector z = test::random_decision(rng, cfg.horizon);
  const HorizonRoad road = test::random_horizon_road(rng, cfg.horizon, 0.1);
  CHECK(objective(cfg, p, x0, z, road) == 0.0);
}

TEST_CASE("the objective is nonnegative") {
  const OcpConfig cfg;
  const HalfCarParams p;
  std::uint64_t rng = 29;
  for (int i = 0; i < 100; ++i) {
    const HalfCarState x0 = test::random_state(rng);
    const DecisionVector z = test::random_decision(rng, cfg.horizon);
    const HorizonRoad road = test::random_horizon_road(rng, cfg.horizon, 0.1);
    CHECK(objective(cfg, p, x0, z, road) >= 0.0);
  }
}

TEST_CASE("rigid vertical translation leaves the objective unchanged") {
  const OcpConfig cfg;
  const HalfCarParams p;
  std::uint64_t rng = 37;
  for (int i = 0; i < 5; ++i) {
    HalfCarState x0 = test::random_state(rng, 0.01);
    const DecisionVector z = test::random_decision(rng, cfg.horizon);
    HorizonRoad road = test::random_horizon_road(rng, cfg.horizon, 0.1);
    const double j0 = objective(cfg, p, x0, z, road);

    const double shift = test::uniform(rng, -1.0, 1.0);
    x0.x1 += shift;
    x0.x2 += shift;
    x0.x3 += shift;
    road.front_height.array() += shift;
    road.rear_height.array() += shift;
    const double j1 = objective(cfg, p, x0, z, road);
    CHECK(j1 == doctest::Approx(j0).epsilon(1e-9));
  }
}

TEST_CASE("gradient vanishes at the global minimum") {
  const OcpConfig cfg;
  const HalfCarParams p;
  const HalfCarState eq = static_equilibrium(p, 0.0);
  const HorizonRoad road = flat_horizon(cfg.horizon);
  const DecisionVector z = DecisionVector::Constant(2 * cfg.horizon, 1000.0);
  const Eigen::VectorXd g = objective_gradient(cfg, p, eq, z, road);
  CHECK(g.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("forward and central gradients agree") {
  const OcpConfig cfg;
  const HalfCarParams p;
  std::uint64_t rng = 41;
  for (int i = 0; i < 20; ++i) {
    const HalfCarState x0 = test::random_state(rng, 0.01);
    const DecisionVector z = test::random_decision(rng, cfg.horizon);
    const HorizonRoad road = test::random_horizon_road(rng, cfg.horizon, 0.1, 0.015);
    const Eigen::VectorXd gf = objective_gradient(cfg, p, x0, z, road, FdScheme::Forward);
    const Eigen::VectorXd gc = objective_gradient(cfg, p, x0, z, road, FdScheme::Central);
    const double floor = std::max(1e-8, 1e-6 * gc.cwiseAbs().maxCoeff());
    for (int j = 0; j < gf.size(); ++j) {
      if (std::abs(gc[j]) <= floor) continue;
      CHECK(std::abs(gf[j] - gc[j]) / std::abs(gc[j]) <= 1e-3);
    }
  }
}

TEST_CASE("gradient matches directional finite differences") {
  const OcpConfig cfg;
  const HalfCarParams p;
  std::uint64_t rng = 43;
  for (int i = 0; i < 5; ++i) {
    const HalfCarState x0 = test::random_state(rng, 0.01);
    const DecisionVector z = test::random_decision(rng, cfg.horizon);
    const HorizonRoad road = test::random_horizon_road(rng, cfg.horizon, 0.1, 0.015);
    Eigen::VectorXd dir(z.size());
    for (int j = 0; j < dir.size(); ++j) dir[j] = test::uniform(rng, -1.0, 1.0);
    dir.normalize();

    const Eigen::VectorXd g = objective_gradient(cfg, p, x0, z, road, FdScheme::Central);
    const double h = 1e-2;
    const double fp = objective(cfg, p, x0, z + h * dir, road);
    const double fm = objective(cfg, p, x0, z - h * dir, road);
    const double fd = (fp - fm) / (2 * h);
    CHECK(g.dot(dir) == doctest::Approx(fd).epsilon(1e-3));
  }
}

TEST_CASE("controls matter away from equilibrium even without the comfort term") {
  OcpConfig cfg;
  cfg.mu_comfort = 0.0;
  const HalfCarParams p;
  std::uint64_t rng = 47;
  const HalfCarState x0 = test::random_state(rng, 0.02);
  const DecisionVector z = DecisionVector::Constant(2 * cfg.horizon, 2000.0);
  const HorizonRoad road = test::random_horizon_road(rng, cfg.horizon, 0.1);
  const Eigen::VectorXd g = objective_gradient(cfg, p, x0, z, road, FdScheme::Central);
  CHECK(g.cwiseAbs().maxCoeff() > 1e-10);
}

TEST_CASE("horizon road flattening round trips") {
  std::uint64_t rng = 53;
  const HorizonRoad road = test::random_horizon_road(rng, 5, 0.1);
  const HorizonRoad back = HorizonRoad::from_flat(road.to_flat());
  CHECK(back.front_height == road.front_height);
  CHECK(back.front_rate == road.front_rate);
  CHECK(back.rear_height == road.rear_height);
  CHECK(back.rear_rate == road.rear_rate);
}

TEST_CASE("the hermite road interpolates its grid data") {
  std::uint64_t rng = 59;
  const HorizonRoad road = test::random_horizon_road(rng, 5, 0.1);
  const RoadSignal s = hermite_road_signal(road.front_height, road.front_rate, 0.1);
  for (int k = 0; k <= 5; ++k) {
    const auto [h, r] = s.eval(0.1 * k);
    CHECK(h == doctest::Approx(road.front_height[k]).epsilon(1e-12));
    CHECK(r == doctest::Approx(road.front_rate[k]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(s.eval(0.51), OutOfWindowError);
  CHECK_THROWS_AS(s.eval(-0.01), OutOfWindowError);
}

TEST_CASE("objective validates its inputs") {
  const OcpConfig cfg;
  const HalfCarParams p;
  const HalfCarState eq = static_equilibrium(p, 0.0);
  const HorizonRoad road = flat_horizon(cfg.horizon);
  CHECK_THROWS_AS(objective(cfg, p, eq, DecisionVector::Constant(3, 1000.0), road),
                  InvalidInputError);
  OcpConfig bad = cfg;
  bad.horizon = 0;
  CHECK_THROWS_AS(objective(bad, p, eq, DecisionVector(), road), InvalidConfigError);
}
