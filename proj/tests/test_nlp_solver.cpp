#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "halfcar/nlp_solver.hpp"
#include "halfcar/ocp.hpp"
#include "test_util.hpp"

using namespace halfcar;

namespace {

BoxProblem scalar_quadratic(double target, double lo = 200.0, double hi = 5000.0) {
  BoxProblem p;
  p.lower = Eigen::VectorXd::Constant(1, lo);
  p.upper = Eigen::VectorXd::Constant(1, hi);
  p.value = [target](const Eigen::VectorXd& z) {
    return (z[0] - target) * (z[0] - target);
  };
  p.gradient = [target](const Eigen::VectorXd& z) {
    return Eigen::VectorXd::Constant(1, 2.0 * (z[0] - target));
  };
  return p;
}

}  // namespace

TEST_CASE("interior minimum of a scalar quadratic") {
  const BoxProblem p = scalar_quadratic(300.0);
  const KktPoint pt = solve(SolverConfig{}, p, Eigen::VectorXd::Constant(1, 4000.0));
  CHECK(pt.z[0] == doctest::Approx(300.0).epsilon(1e-8));
  CHECK(pt.mult_lower[0] == 0.0);
  CHECK(pt.mult_upper[0] == 0.0);
  CHECK(pt.active_set[0] == BoundStatus::Free);
  CHECK(pt.regular);
  CHECK(pt.reduced_hessian(0, 0) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("bound-active minimum recovers its multiplier") {
  const BoxProblem p = scalar_quadratic(100.0);
  const KktPoint pt = solve(SolverConfig{}, p, Eigen::VectorXd::Constant(1, 3000.0));
  CHECK(pt.z[0] == 200.0);
  CHECK(pt.active_set[0] == BoundStatus::AtLower);
  CHECK(pt.mult_lower[0] == doctest::Approx(200.0).epsilon(1e-8));
  CHECK(pt.strict_complementarity);
  CHECK(kkt_residual(p, pt) <= 1e-10);
}

TEST_CASE("diagonal quadratics over boxes recover the clamped solution") {
  const int n = 10;
  Eigen::VectorXd targets(n), weights(n);
  std::uint64_t rng = 61;
  for (int i = 0; i < n; ++i) {
    targets[i] = test::uniform(rng, -1500.0, 7000.0);
    weights[i] = test::uniform(rng, 0.5, 4.0);
  }
  BoxProblem p;
  p.lower = Eigen::VectorXd::Constant(n, 200.0);
  p.upper = Eigen::VectorXd::Constant(n, 5000.0);
  p.value = [=](const Eigen::VectorXd& z) {
    return (weights.array() * (z - targets).array().square()).sum();
  };
  p.gradient = [=](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(2.0 * weights.array() * (z - targets).array());
  };
  SolverConfig cfg;
  cfg.kkt_tolerance = 1e-12;  // analytic gradients; the Newton polish finishes the job
  const KktPoint pt = solve(cfg, p, Eigen::VectorXd::Constant(n, 2600.0));
  const Eigen::VectorXd expect = targets.cwiseMax(p.lower).cwiseMin(p.upper);
  CHECK((pt.z - expect).cwiseAbs().maxCoeff() <= 1e-8);
  for (int i = 0; i < n; ++i) {
    if (targets[i] < 200.0) CHECK(pt.active_set[i] == BoundStatus::AtLower);
    if (targets[i] > 5000.0) CHECK(pt.active_set[i] == BoundStatus::AtUpper);
  }
}

TEST_CASE("a coupled convex quadratic converges to its analytic minimum") {
  const int n = 6;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  std::uint64_t rng = 67;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = test::uniform(rng, -0.3, 0.3);
    A(i, i) = 2.0 + test::uniform(rng, 0.0, 1.0);
  }
  const Eigen::VectorXd center = Eigen::VectorXd::Constant(n, 2000.0);
  const Eigen::VectorXd b = A * center;  // interior minimizer at `center`
  BoxProblem p;
  p.lower = Eigen::VectorXd::Constant(n, 200.0);
  p.upper = Eigen::VectorXd::Constant(n, 5000.0);
  p.value = [=](const Eigen::VectorXd& z) { return 0.5 * z.dot(A * z) - b.dot(z); };
  p.gradient = [=](const Eigen::VectorXd& z) { return Eigen::VectorXd(A * z - b); };
  SolverConfig cfg;
  cfg.kkt_tolerance = 1e-10;
  const KktPoint pt = solve(cfg, p, Eigen::VectorXd::Constant(n, 400.0));
  CHECK((pt.z - center).cwiseAbs().maxCoeff() <= 1e-5);
  CHECK(pt.regular);
  CHECK((pt.reduced_hessian - A).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("accepted iterates descend monotonically") {
  const int n = 6;
  std::uint64_t rng = 71;
  Eigen::VectorXd targets(n);
  for (int i = 0; i < n; ++i) targets[i] = test::uniform(rng, -2000.0, 8000.0);
  BoxProblem p;
  p.lower = Eigen::VectorXd::Constant(n, 200.0);
  p.upper = Eigen::VectorXd::Constant(n, 5000.0);
  p.value = [=](const Eigen::VectorXd& z) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::pow(z[i] - targets[i], 4) / 1e6;
    return s;
  };
  p.gradient = [=](const Eigen::VectorXd& z) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = 4.0 * std::pow(z[i] - targets[i], 3) / 1e6;
    return g;
  };
  std::vector<double> values;
  solve(SolverConfig{}, p, Eigen::VectorXd::Constant(n, 2600.0),
        [&](int, double f, double) { values.push_back(f); });
  REQUIRE(values.size() >= 2);
  for (std::size_t i = 1; i < values.size(); ++i) CHECK(values[i] <= values[i - 1]);
}

TEST_CASE("restarting from the solution terminates immediately") {
  const BoxProblem p = scalar_quadratic(321.0);
  const KktPoint first = solve(SolverConfig{}, p, Eigen::VectorXd::Constant(1, 4999.0));
  const KktPoint again = solve(SolverConfig{}, p, first.z);
  CHECK(again.iterations <= 2);
  CHECK(std::abs(again.z[0] - first.z[0]) <= 1e-8);
}

TEST_CASE("solutions are feasible to the last bit") {
  std::uint64_t rng = 73;
  for (int trial = 0; trial < 5; ++trial) {
    const double t1 = test::uniform(rng, -4000.0, 9000.0);
    const double t2 = test::uniform(rng, -4000.0, 9000.0);
    BoxProblem p;
    p.lower = Eigen::VectorXd::Constant(2, 200.0);
    p.upper = Eigen::VectorXd::Constant(2, 5000.0);
    p.value = [=](const Eigen::VectorXd& z) {
      return (z[0] - t1) * (z[0] - t1) + 0.3 * (z[1] - t2) * (z[1] - t2);
    };
    p.gradient = [=](const Eigen::VectorXd& z) {
      Eigen::VectorXd g(2);
      g << 2.0 * (z[0] - t1), 0.6 * (z[1] - t2);
      return g;
    };
    const KktPoint pt = solve(SolverConfig{}, p, Eigen::VectorXd::Constant(2, 2600.0));
    for (int i = 0; i < 2; ++i) {
      CHECK(pt.z[i] >= p.lower[i]);
      CHECK(pt.z[i] <= p.upper[i]);
    }
  }
}

TEST_CASE("the equilibrium horizon problem solves to zero cost") {
  const OcpConfig ocp;
  const HalfCarParams params;
  const HalfCarState eq = static_equilibrium(params, 0.0);
  HorizonRoad road;
  road.front_height = Eigen::VectorXd::Zero(ocp.horizon + 1);
  road.front_rate = Eigen::VectorXd::Zero(ocp.horizon + 1);
  road.rear_height = Eigen::VectorXd::Zero(ocp.horizon + 1);
  road.rear_rate = Eigen::VectorXd::Zero(ocp.horizon + 1);
  const BoxProblem p = make_box_problem(ocp, params, eq, road);

  for (double init : {300.0, 4500.0}) {
    double final_pg = -1.0;
    const KktPoint pt = solve(SolverConfig{}, p,
                              Eigen::VectorXd::Constant(2 * ocp.horizon, init),
                              [&](int, double, double pg) { final_pg = pg; });
    CHECK(pt.objective <= 1e-12);
    CHECK(final_pg <= 1e-6);
  }
}

TEST_CASE("running out of iterations raises a nonconvergence error with the best iterate") {
  // a curved valley that a single iteration cannot descend
  BoxProblem p;
  p.lower = Eigen::VectorXd::Constant(2, 200.0);
  p.upper = Eigen::VectorXd::Constant(2, 5000.0);
  auto xy = [](const Eigen::VectorXd& z) {
    return std::pair{(z[0] - 200.0) / 1000.0, (z[1] - 200.0) / 1000.0};
  };
  p.value = [xy](const Eigen::VectorXd& z) {
    const auto [x, y] = xy(z);
    return (1 - x) * (1 - x) + 100.0 * (y - x * x) * (y - x * x);
  };
  p.gradient = [xy](const Eigen::VectorXd& z) {
    const auto [x, y] = xy(z);
    Eigen::VectorXd g(2);
    g[0] = (-2.0 * (1 - x) - 400.0 * (y - x * x) * x) / 1000.0;
    g[1] = 200.0 * (y - x * x) / 1000.0;
    return g;
  };
  SolverConfig cfg;
  cfg.max_iterations = 1;
  Eigen::VectorXd start(2);
  start << 4800.0, 300.0;
  const double f_start = p.value(start);
  try {
    solve(cfg, p, start);
    FAIL("expected NonconvergenceError");
  } catch (const NonconvergenceError& e) {
    CHECK(e.best.z[0] >= 200.0);
    CHECK(e.best.z[0] <= 5000.0);
    CHECK(e.best.objective < f_start);
    CHECK(e.best.iterations == 1);
  }
}

TEST_CASE("kkt_residual flags hand-built violations") {
  const BoxProblem p = scalar_quadratic(300.0);
  KktPoint pt;
  pt.z = Eigen::VectorXd::Constant(1, 199.5);  // below the lower bound by 0.5
  pt.mult_lower = Eigen::VectorXd::Zero(1);
  pt.mult_upper = Eigen::VectorXd::Zero(1);
  pt.active_set = {BoundStatus::Free};
  CHECK(kkt_residual(p, pt) >= 0.5);
}

TEST_CASE("a non-finite objective is an invalid problem") {
  BoxProblem p = scalar_quadratic(300.0);
  p.value = [](const Eigen::VectorXd&) { return std::nan(""); };
  CHECK_THROWS_AS(solve(SolverConfig{}, p, Eigen::VectorXd::Constant(1, 1000.0)),
                  InvalidInputError);
}
