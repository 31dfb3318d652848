#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "halfcar/simulation.hpp"
#include "test_util.hpp"

using namespace halfcar;

namespace {

RoadSignal tone_road(double amp, double freq, double phase = 0.0) {
  return RoadSignal(
      [amp, freq, phase](double t) {
        const double w = 2 * std::numbers::pi * freq;
        return std::pair{amp * std::sin(w * t + phase), amp * w * std::cos(w * t + phase)};
      },
      -1e9, 1e9);
}

}  // namespace

TEST_CASE("equilibrium is a fixed point with zero running cost") {
  const HalfCarParams p;
  const HalfCarState eq = static_equilibrium(p, 0.0);
  const RoadSignal flat = RoadSignal::flat(0.0);
  const IntegratorConfig cfg{10, 0.1};

  std::vector<DamperControl> controls(5, DamperControl{1200, 3300});
  const auto traj = rollout(cfg, p, AugmentedState{eq, 0.0, 0.0}, controls, flat, flat, 0.0);
  REQUIRE(traj.size() == 6);
  for (const AugmentedState& s : traj) {
    CHECK((s.car.to_vector() - eq.to_vector()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(s.handling_cost <= 1e-15);
    CHECK(s.comfort_cost <= 1e-12);
  }
}

TEST_CASE("integrator shows fourth-order convergence") {
  const HalfCarParams p;
  const HalfCarState eq = static_equilibrium(p, 0.0);
  const RoadSignal road = tone_road(0.03, 2.0);
  const AugmentedState s0{eq, 0.0, 0.0};

  auto final_state = [&](int substeps) {
    const IntegratorConfig cfg{substeps, 0.3};
    return step_sample(cfg, p, s0, DamperControl{1500, 900}, road, road, 0.0)
        .car.to_vector();
  };
  const Vector8d coarse = final_state(30);
  const Vector8d mid = final_state(60);
  const Vector8d fine = final_state(120);
  const double e1 = (coarse - mid).norm();
  const double e2 = (mid - fine).norm();
  const double order = std::log2(e1 / e2);
  CHECK(order >= 3.7);
  CHECK(order <= 4.3);
}

TEST_CASE("no gravity, no road, no motion") {
  HalfCarParams p;
  p.g = 0.0;
  const IntegratorConfig cfg{20, 0.5};
  const AugmentedState out = step_sample(cfg, p, AugmentedState{}, DamperControl{300, 300},
                                         RoadSignal::flat(0.0), RoadSignal::flat(0.0), 0.0);
  CHECK(out.car.to_vector().cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.comfort_cost == 0.0);
}

TEST_CASE("rollout is the iterated step and has the semigroup property") {
  const HalfCarParams p;
  std::uint64_t rng = 5;
  const HalfCarState s = test::random_state(rng);
  const RoadSignal road = tone_road(0.02, 1.3, 0.7);
  const IntegratorConfig cfg{10, 0.1};

  const auto empty = rollout(cfg, p, AugmentedState{s, 0, 0}, {}, road, road, 0.0);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].car.to_vector() == s.to_vector());

  std::vector<DamperControl> controls;
  for (int i = 0; i < 5; ++i) controls.push_back(test::random_control(rng));

  const auto whole = rollout(cfg, p, AugmentedState{s, 0, 0}, controls, road, road, 0.0);
  const auto head = rollout(cfg, p, AugmentedState{s, 0, 0},
                            std::span(controls).subspan(0, 2), road, road, 0.0);
  const auto tail = rollout(cfg, p, head.back(), std::span(controls).subspan(2), road,
                            road, 2 * cfg.sampling_period);
  REQUIRE(whole.size() == 6);
  REQUIRE(tail.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(whole[2 + i].car.to_vector() == tail[i].car.to_vector());
    CHECK(whole[2 + i].handling_cost == tail[i].handling_cost);
    CHECK(whole[2 + i].comfort_cost == tail[i].comfort_cost);
  }
}

TEST_CASE("cost quadrature agrees with trapezoidal post-integration") {
  const HalfCarParams p;
  std::uint64_t rng = 9;
  const HalfCarState s = test::random_state(rng, 0.01);
  const RoadSignal road = tone_road(0.02, 1.7);
  const DamperControl u{2000, 800};
  const NominalForces nominal = nominal_forces(p);

  std::vector<double> handling, comfort;
  NodeObserver observer = [&](double t, const AugmentedState& a) {
    const auto [w1, w1d] = road.eval(t);
    const auto [w2, w2d] = road.eval(t);
    const RoadPoint r{w1, w2, w1d, w2d};
    const ForceSet f = suspension_forces(p, a.car, u, r);
    const double e1 = (f.f1 - nominal.front) / nominal.front;
    const double e2 = (f.f2 - nominal.rear) / nominal.rear;
    handling.push_back(e1 * e1 + e2 * e2);
    const double mj = p.m3 * chassis_jerk(p, a.car, u, r);
    comfort.push_back(mj * mj);
  };
  const IntegratorConfig cfg{20000, 0.1};
  const AugmentedState out =
      step_sample(cfg, p, AugmentedState{s, 0, 0}, u, road, road, 0.0, observer);

  const double h = cfg.sampling_period / cfg.substeps_per_sample;
  auto trapezoid = [h](const std::vector<double>& v) {
    double sum = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) sum += 0.5 * h * (v[i - 1] + v[i]);
    return sum;
  };
  CHECK(out.handling_cost ==
        doctest::Approx(trapezoid(handling)).epsilon(1e-6));
  CHECK(out.comfort_cost == doctest::Approx(trapezoid(comfort)).epsilon(1e-6));
}

TEST_CASE("identical inputs give bitwise identical trajectories") {
  const HalfCarParams p;
  std::uint64_t rng = 13;
  const HalfCarState s = test::random_state(rng);
  const RoadSignal road = tone_road(0.025, 0.9);
  const IntegratorConfig cfg{10, 0.1};
  const DamperControl u{1111, 2222};
  const AugmentedState a = step_sample(cfg, p, AugmentedState{s, 0, 0}, u, road, road, 0.0);
  const AugmentedState b = step_sample(cfg, p, AugmentedState{s, 0, 0}, u, road, road, 0.0);
  CHECK(a.car.to_vector() == b.car.to_vector());
  CHECK(a.handling_cost == b.handling_cost);
  CHECK(a.comfort_cost == b.comfort_cost);
}

TEST_CASE("road window violations surface as errors") {
  const HalfCarParams p;
  const RoadSignal short_road(
      [](double) { return std::pair{0.0, 0.0}; }, 0.0, 0.05);
  const IntegratorConfig cfg{10, 0.1};
  CHECK_THROWS_AS(step_sample(cfg, p, AugmentedState{}, DamperControl{}, short_road,
                              short_road, 0.0),
                  OutOfWindowError);
}
