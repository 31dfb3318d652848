#ifndef HALFCAR_SIMULATION_HPP
#define HALFCAR_SIMULATION_HPP

#include <functional>
#include <span>
#include <vector>

#include "halfcar/road_profile.hpp"
#include "halfcar/vehicle_model.hpp"

namespace halfcar {

struct IntegratorConfig {
  /// RK4 steps inside one sampling interval. The wheel dynamics have an
  /// eigenvalue near -(d + u_max)/m1 = -347 1/s at the damper ceiling, so the
  /// substep must keep h * 347 inside the RK4 stability region; 20 substeps
  /// (h = 5 ms) leaves a 1.6x margin where 10 would be unstable.
  int substeps_per_sample = 20;
  double sampling_period = 0.1;  ///< T [s]; control is held constant over it
};

/// Car state augmented with the running cost quadratures. handling_cost
/// accumulates the squared normalized wheel-force deviations, comfort_cost
/// the squared chassis jerk times m3; both are nondecreasing in time.
struct AugmentedState {
  HalfCarState car;
  double handling_cost = 0.0;  ///< integral of sum_i ((f_i - F_i)/F_i)^2
  double comfort_cost = 0.0;   ///< integral of (m3 * x3''')^2
};

/// Called at every internal integration node with (t, state at t).
using NodeObserver = std::function<void(double, const AugmentedState&)>;

/// Integrates the 10-dimensional augmented dynamics over one sampling
/// interval [t0, t0 + T] with the control held constant (classical RK4,
/// fixed substeps). The observer, when set, fires at each substep start
/// and at the interval end.
AugmentedState step_sample(const IntegratorConfig& cfg, const HalfCarParams& p,
                           const AugmentedState& s0, const DamperControl& u,
                           const RoadSignal& front, const RoadSignal& rear,
                           double t0, const NodeObserver& observer = {});

/// Applies step_sample once per control; element 0 of the result is s0.
std::vector<AugmentedState> rollout(const IntegratorConfig& cfg,
                                    const HalfCarParams& p,
                                    const AugmentedState& s0,
                                    std::span<const DamperControl> controls,
                                    const RoadSignal& front,
                                    const RoadSignal& rear, double t0);

}  // namespace halfcar

#endif  // HALFCAR_SIMULATION_HPP
