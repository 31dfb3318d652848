#ifndef HALFCAR_VEHICLE_MODEL_HPP
#define HALFCAR_VEHICLE_MODEL_HPP

#include <Eigen/Core>

#include "halfcar/errors.hpp"

namespace halfcar {

using Vector8d = Eigen::Matrix<double, 8, 1>;

/// Physical constants of the half car. Defaults are the standard benchmark
/// set. All quantities in SI base units (the damper/spring magnitudes are
/// only consistent with the control bounds when read as N/m and N s/m).
struct HalfCarParams {
  double a = 1.0;         ///< distance front axle to joint [m]
  double b = 1.0;         ///< distance rear axle to joint [m]
  double m1 = 15.0;       ///< front wheel mass [kg]
  double m2 = 15.0;       ///< rear wheel mass [kg]
  double m3 = 750.0;      ///< chassis mass [kg]
  double inertia = 500.0; ///< pitch inertia [kg m^2]
  double k1 = 2e5;        ///< front wheel spring [N/m]
  double k2 = 2e5;        ///< rear wheel spring [N/m]
  double d1 = 2e2;        ///< front wheel damper [N s/m]
  double d2 = 2e2;        ///< rear wheel damper [N s/m]
  double k3 = 1e5;        ///< front chassis spring [N/m]
  double k4 = 1e5;        ///< rear chassis spring [N/m]
  double g = 9.81;        ///< gravitational acceleration [m/s^2]

  /// Throws InvalidInputError unless all masses, stiffnesses, dampers and
  /// geometry are strictly positive and finite.
  void validate() const;
};

/// Heights are measured so that the +m*g gravity terms of the dynamics
/// produce positive spring deflections (x - w > 0) at rest.
struct HalfCarState {
  double x1 = 0.0;  ///< front wheel center height [m]
  double x2 = 0.0;  ///< rear wheel center height [m]
  double x3 = 0.0;  ///< chassis center height [m]
  double x4 = 0.0;  ///< pitch angle [rad]
  double v1 = 0.0;
  double v2 = 0.0;
  double v3 = 0.0;
  double v4 = 0.0;  ///< pitch rate [rad/s]

  Vector8d to_vector() const;
  static HalfCarState from_vector(const Vector8d& v);
  bool all_finite() const;
};

/// Active damper coefficients, the control inputs. The admissible set is
/// [0.2, 5] kN s/m per damper, i.e. [200, 5000] in base units.
struct DamperControl {
  double u1 = 1000.0;  ///< front [N s/m]
  double u2 = 1000.0;  ///< rear [N s/m]
};

inline constexpr double kDamperMin = 200.0;
inline constexpr double kDamperMax = 5000.0;

/// Road excitation under both wheels at one time instant.
struct RoadPoint {
  double w1 = 0.0;     ///< height under front wheel [m]
  double w2 = 0.0;     ///< height under rear wheel [m]
  double w1dot = 0.0;  ///< height rate under front wheel [m/s]
  double w2dot = 0.0;  ///< height rate under rear wheel [m/s]
};

struct ForceSet {
  double f1;  ///< front wheel suspension force [N]
  double f2;  ///< rear wheel suspension force [N]
  double f3;  ///< front chassis suspension force [N]
  double f4;  ///< rear chassis suspension force [N]
};

/// Static axle loads used to normalize the handling cost.
struct NominalForces {
  double front;  ///< F1 = a g (m1+m2+m3) / (a+b) [N]
  double rear;   ///< F2 = b g (m1+m2+m3) / (a+b) [N]
};

/// Everything the integrator needs at one evaluation point, computed in a
/// single pass: forces, the first-order state derivative and the chassis
/// jerk under zero-order-hold control.
struct DynamicsEval {
  ForceSet forces;
  Vector8d derivative;  ///< (v1..v4, a1..a4)
  double chassis_jerk;  ///< third derivative of x3 [m/s^3]
};

DynamicsEval evaluate_dynamics(const HalfCarParams& p, const HalfCarState& s,
                               const DamperControl& u, const RoadPoint& r);

/// Suspension force laws. Requires |x4| < pi/2; the pitch dynamics divide
/// by cos(x4) implicitly through the lever geometry.
ForceSet suspension_forces(const HalfCarParams& p, const HalfCarState& s,
                           const DamperControl& u, const RoadPoint& r);

/// Right-hand side of the first-order form: (v1..v4, a1..a4).
Vector8d dynamics_rhs(const HalfCarParams& p, const HalfCarState& s,
                      const DamperControl& u, const RoadPoint& r);

/// Analytic third derivative of the chassis height under zero-order-hold
/// control (u constant on the evaluation interval). Only the chassis force
/// rates enter, so no road acceleration is needed.
double chassis_jerk(const HalfCarParams& p, const HalfCarState& s,
                    const DamperControl& u, const RoadPoint& r);

/// The unique rest state on a flat road of the given height. Velocities and
/// force balance residuals are zero by construction.
HalfCarState static_equilibrium(const HalfCarParams& p, double flat_road_height);

NominalForces nominal_forces(const HalfCarParams& p);

}  // namespace halfcar

#endif  // HALFCAR_VEHICLE_MODEL_HPP
