#include "halfcar/vehicle_model.hpp"

#include <cmath>
#include <numbers>

namespace halfcar {

namespace {

void require_finite(const HalfCarState& s, const DamperControl& u,
                    const RoadPoint& r) {
  if (!s.all_finite()) {
    throw InvalidInputError("half-car state contains non-finite components");
  }
  if (!std::isfinite(u.u1) || !std::isfinite(u.u2)) {
    throw InvalidInputError("damper control contains non-finite components");
  }
  if (!std::isfinite(r.w1) || !std::isfinite(r.w2) || !std::isfinite(r.w1dot) ||
      !std::isfinite(r.w2dot)) {
    throw InvalidInputError("road point contains non-finite components");
  }
}

void require_valid_pitch(double x4) {
  if (!(std::abs(x4) < std::numbers::pi / 2.0)) {
    throw ModelValidityError("pitch angle outside (-pi/2, pi/2): " +
                             std::to_string(x4));
  }
}

}  // namespace

void HalfCarParams::validate() const {
  const double vals[] = {a, b, m1, m2, m3, inertia, k1, k2, d1, d2, k3, k4};
  for (double v : vals) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InvalidInputError("half-car parameters must be finite and strictly positive");
    }
  }
  if (!std::isfinite(g)) throw InvalidInputError("gravitational acceleration must be finite");
}

Vector8d HalfCarState::to_vector() const {
  Vector8d v;
  v << x1, x2, x3, x4, v1, v2, v3, v4;
  return v;
}

HalfCarState HalfCarState::from_vector(const Vector8d& v) {
  return HalfCarState{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

bool HalfCarState::all_finite() const {
  return std::isfinite(x1) && std::isfinite(x2) && std::isfinite(x3) &&
         std::isfinite(x4) && std::isfinite(v1) && std::isfinite(v2) &&
         std::isfinite(v3) && std::isfinite(v4);
}

DynamicsEval evaluate_dynamics(const HalfCarParams& p, const HalfCarState& s,
                               const DamperControl& u, const RoadPoint& r) {
  require_finite(s, u, r);
  require_valid_pitch(s.x4);
  const double sin4 = std::sin(s.x4);
  const double cos4 = std::cos(s.x4);

  DynamicsEval out;
  ForceSet& f = out.forces;
  f.f1 = p.k1 * (s.x1 - r.w1) + p.d1 * (s.v1 - r.w1dot);
  f.f2 = p.k2 * (s.x2 - r.w2) + p.d2 * (s.v2 - r.w2dot);
  f.f3 = p.k3 * (s.x3 - s.x1 - p.b * sin4) +
         u.u1 * (s.v3 - s.v1 - p.b * s.v4 * cos4);
  f.f4 = p.k4 * (s.x3 - s.x2 + p.a * sin4) +
         u.u2 * (s.v3 - s.v2 + p.a * s.v4 * cos4);

  const double a1 = p.g + (f.f3 - f.f1) / p.m1;
  const double a2 = p.g + (f.f4 - f.f2) / p.m2;
  const double a3 = p.g - (f.f3 + f.f4) / p.m3;
  const double a4 = cos4 * (p.b * f.f3 - p.a * f.f4) / p.inertia;
  out.derivative << s.v1, s.v2, s.v3, s.v4, a1, a2, a3, a4;

  // d/dt (v4 cos x4) = a4 cos x4 - v4^2 sin x4; only the chassis force rates
  // enter the jerk, so no road acceleration is required
  const double lever_rate = a4 * cos4 - s.v4 * s.v4 * sin4;
  const double fdot3 = p.k3 * (s.v3 - s.v1 - p.b * s.v4 * cos4) +
                       u.u1 * (a3 - a1 - p.b * lever_rate);
  const double fdot4 = p.k4 * (s.v3 - s.v2 + p.a * s.v4 * cos4) +
                       u.u2 * (a3 - a2 + p.a * lever_rate);
  out.chassis_jerk = -(fdot3 + fdot4) / p.m3;
  return out;
}

ForceSet suspension_forces(const HalfCarParams& p, const HalfCarState& s,
                           const DamperControl& u, const RoadPoint& r) {
  return evaluate_dynamics(p, s, u, r).forces;
}

Vector8d dynamics_rhs(const HalfCarParams& p, const HalfCarState& s,
                      const DamperControl& u, const RoadPoint& r) {
  return evaluate_dynamics(p, s, u, r).derivative;
}

double chassis_jerk(const HalfCarParams& p, const HalfCarState& s,
                    const DamperControl& u, const RoadPoint& r) {
  return evaluate_dynamics(p, s, u, r).chassis_jerk;
}

HalfCarState static_equilibrium(const HalfCarParams& p, double flat_road_height) {
  p.validate();
  // Chassis force/torque balance fixes the chassis spring forces, then each
  // wheel balance fixes the wheel spring force.
  const double f3 = p.a * p.m3 * p.g / (p.a + p.b);
  const double f4 = p.b * p.m3 * p.g / (p.a + p.b);
  const double f1 = p.m1 * p.g + f3;
  const double f2 = p.m2 * p.g + f4;
  const double w = flat_road_height;
  const double x1 = w + f1 / p.k1;
  const double x2 = w + f2 / p.k2;
  // x3 = x1 + b s + f3/k3 = x2 - a s + f4/k4 with s = sin(x4)
  const double s = ((x2 - x1) + f4 / p.k4 - f3 / p.k3) / (p.a + p.b);
  if (!(std::abs(s) < 1.0)) {
    throw NoEquilibriumError("no rest pitch angle exists for these parameters");
  }
  const double x4 = std::asin(s);
  const double x3 = x1 + p.b * s + f3 / p.k3;
  return HalfCarState{x1, x2, x3, x4, 0.0, 0.0, 0.0, 0.0};
}

NominalForces nominal_forces(const HalfCarParams& p) {
  const double total = p.g * (p.m1 + p.m2 + p.m3);
  return NominalForces{p.a * total / (p.a + p.b), p.b * total / (p.a + p.b)};
}

}  // namespace halfcar
