#include "halfcar/simulation.hpp"

#include <cmath>

namespace halfcar {

namespace {

struct Aug10 {
  Vector8d car;
  double q_handling;
  double q_comfort;
};

Aug10 augmented_rhs(const HalfCarParams& p, const NominalForces& nominal,
                    const Aug10& y, const DamperControl& u, const RoadPoint& r) {
  const HalfCarState s = HalfCarState::from_vector(y.car);
  const DynamicsEval eval = evaluate_dynamics(p, s, u, r);

  Aug10 d;
  d.car = eval.derivative;
  const double e1 = (eval.forces.f1 - nominal.front) / nominal.front;
  const double e2 = (eval.forces.f2 - nominal.rear) / nominal.rear;
  d.q_handling = e1 * e1 + e2 * e2;
  const double mj = p.m3 * eval.chassis_jerk;
  d.q_comfort = mj * mj;
  return d;
}

}  // namespace

AugmentedState step_sample(const IntegratorConfig& cfg, const HalfCarParams& p,
                           const AugmentedState& s0, const DamperControl& u,
                           const RoadSignal& front, const RoadSignal& rear,
                           double t0, const NodeObserver& observer) {
  if (cfg.substeps_per_sample < 1 || !(cfg.sampling_period > 0.0)) {
    throw InvalidConfigError("integrator needs substeps >= 1 and T > 0");
  }
  const NominalForces nominal = nominal_forces(p);
  const int m = cfg.substeps_per_sample;
  const double h = cfg.sampling_period / m;

  // all RK4 stage times are known up front: node i at t0 + i*h plus the
  // substep midpoints, so the road signals are sampled once per step
  std::vector<RoadPoint> stage_road(2 * m + 1);
  for (int i = 0; i <= 2 * m; ++i) {
    const double t = t0 + 0.5 * h * i;
    const auto [w1, w1dot] = front.eval(t);
    const auto [w2, w2dot] = rear.eval(t);
    stage_road[i] = RoadPoint{w1, w2, w1dot, w2dot};
  }

  Aug10 y{s0.car.to_vector(), s0.handling_cost, s0.comfort_cost};
  auto as_state = [](const Aug10& a) {
    return AugmentedState{HalfCarState::from_vector(a.car), a.q_handling, a.q_comfort};
  };
  auto advance = [](const Aug10& yy, const Aug10& k, double c) {
    return Aug10{yy.car + c * k.car, yy.q_handling + c * k.q_handling,
                 yy.q_comfort + c * k.q_comfort};
  };

  for (int i = 0; i < m; ++i) {
    if (observer) observer(t0 + i * h, as_state(y));
    const RoadPoint& r0 = stage_road[2 * i];
    const RoadPoint& r1 = stage_road[2 * i + 1];
    const RoadPoint& r2 = stage_road[2 * i + 2];
    const Aug10 k1 = augmented_rhs(p, nominal, y, u, r0);
    const Aug10 k2 = augmented_rhs(p, nominal, advance(y, k1, h / 2), u, r1);
    const Aug10 k3 = augmented_rhs(p, nominal, advance(y, k2, h / 2), u, r1);
    const Aug10 k4 = augmented_rhs(p, nominal, advance(y, k3, h), u, r2);
    y.car += (h / 6.0) * (k1.car + 2.0 * k2.car + 2.0 * k3.car + k4.car);
    y.q_handling += (h / 6.0) * (k1.q_handling + 2.0 * k2.q_handling +
                                 2.0 * k3.q_handling + k4.q_handling);
    y.q_comfort += (h / 6.0) * (k1.q_comfort + 2.0 * k2.q_comfort +
                                2.0 * k3.q_comfort + k4.q_comfort);
  }
  if (observer) observer(t0 + cfg.sampling_period, as_state(y));
  return as_state(y);
}

std::vector<AugmentedState> rollout(const IntegratorConfig& cfg,
                                    const HalfCarParams& p,
                                    const AugmentedState& s0,
                                    std::span<const DamperControl> controls,
                                    const RoadSignal& front,
                                    const RoadSignal& rear, double t0) {
  std::vector<AugmentedState> out;
  out.reserve(controls.size() + 1);
  out.push_back(s0);
  double t = t0;
  for (const DamperControl& u : controls) {
    out.push_back(step_sample(cfg, p, out.back(), u, front, rear, t));
    t += cfg.sampling_period;
  }
  return out;
}

}  // namespace halfcar
