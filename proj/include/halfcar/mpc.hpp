#ifndef HALFCAR_MPC_HPP
#define HALFCAR_MPC_HPP

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "halfcar/ocp.hpp"
#include "halfcar/road_profile.hpp"
#include "halfcar/sensitivity.hpp"
#include "halfcar/simulation.hpp"

namespace halfcar {

enum class ControllerMode { Nominal, SensitivityUpdate, FullReoptimization };

std::string to_string(ControllerMode mode);
ControllerMode mode_from_string(const std::string& name);

/// Where the uniform disturbances enter. Measurement noise corrupts what the
/// controller sees; plant jumps displace the true state at the sampling
/// instants. Road noise corrupts the raw samples once per run, so every
/// controller works from the same wrong-but-consistent road view while the
/// plant always rolls on the clean profile.
struct DisturbanceConfig {
  double state_meas_pos = 0.0;   ///< [m] on measured positions
  double state_meas_vel = 0.0;   ///< [m/s] on measured velocities
  double plant_state_pos = 0.0;  ///< [m] jumps on true positions
  double plant_state_vel = 0.0;  ///< [m/s] jumps on true velocities
  double road_meas = 0.0;        ///< [m] on raw road samples
};

struct MpcConfig {
  int prediction_lead = 2;  ///< sampling intervals between solve and application
  int run_length = 0;       ///< closed-loop steps
  std::uint64_t seed = 0;
  OcpConfig ocp;
  SolverConfig solver;
  int plant_substep_multiplier = 5;  ///< plant integrator refinement vs model
  DisturbanceConfig disturbance;
  double road_cutoff_hz = 50.0;
  AxleDelay delay{0.1};
  TrustThresholds trust;
  int structure_check_index = 1;
  /// Wall-clock timing is inherently nonreproducible; switching it off zeroes
  /// the recorded precompute times so output files become byte-identical
  /// across reruns.
  bool record_timing = true;

  void validate() const;
};

struct StepRecord {
  int step = 0;
  double time = 0.0;
  HalfCarState plant_state;     ///< true state at the interval start (after jumps)
  HalfCarState measured_state;
  DamperControl applied;
  double stage_cost = 0.0;
  double cum_cost = 0.0;
  int solver_iterations = 0;    ///< precompute solve plus any reoptimization
  double precompute_seconds = 0.0;
  bool structure_change = false;
  int clamped_count = 0;
  bool solver_fault = false;
};

struct ClosedLoopTrace {
  ControllerMode mode = ControllerMode::Nominal;
  std::vector<StepRecord> steps;
  /// (t, m3 * chassis jerk) along the plant trajectory at the plant's
  /// integration nodes.
  std::vector<std::pair<double, double>> jerk;
};

struct RunSummary {
  ControllerMode mode = ControllerMode::Nominal;
  double total_cost = 0.0;
  double max_precompute_s = 0.0;
  double mean_precompute_s = 0.0;
  int structure_changes = 0;
  int clamp_events = 0;
  int solver_faults = 0;
  double realtime_budget_s = 0.0;  ///< 2T
};

struct ClosedLoopResult {
  ClosedLoopTrace trace;
  RunSummary summary;
};

/// Nominal-model propagation of the measured state under the already
/// committed controls; the advanced-step scheme solves the horizon problem
/// at this predicted state. An empty control span returns the measurement.
HalfCarState predict_initial_state(const IntegratorConfig& cfg,
                                   const HalfCarParams& p,
                                   const HalfCarState& measured,
                                   std::span<const DamperControl> committed,
                                   const RoadSignal& front, const RoadSignal& rear,
                                   double t);

/// The advanced-step closed loop. Construction primes the pipeline with one
/// solve at t = 0 whose first `prediction_lead` controls run open loop in
/// every mode; afterwards each step applies the solution precomputed
/// `prediction_lead` intervals earlier (per mode), then precomputes for the
/// step `prediction_lead` ahead, then advances the plant one interval.
class ClosedLoopEngine {
 public:
  ClosedLoopEngine(const MpcConfig& cfg, const HalfCarParams& params,
                   const RoadMeasurement& road, ControllerMode mode);

  /// Runs one sampling interval; returns the record appended to the trace.
  const StepRecord& step();

  bool done() const { return next_step_ >= cfg_.run_length; }
  const ClosedLoopTrace& trace() const { return trace_; }
  RunSummary summary() const;

 private:
  struct Pending {
    int target_step = 0;
    DamperControl first;
    DecisionVector plan;
    std::optional<KktPoint> point;
    std::optional<SensitivityBundle> bundle;
    bool fault = false;
  };

  MpcConfig cfg_;
  HalfCarParams params_;
  ControllerMode mode_;
  RoadMeasurement road_;
  RoadSignal true_front_, true_rear_;
  RoadSignal view_front_, view_rear_;  ///< the controller's (possibly corrupted) view
  IntegratorConfig plant_integrator_;
  AugmentedState plant_;
  std::deque<Pending> pending_;
  DamperControl last_applied_;
  std::uint64_t jump_stream_, meas_stream_;
  int next_step_ = 0;
  double cum_cost_ = 0.0;
  ClosedLoopTrace trace_;
  std::vector<double> precompute_times_;
};

ClosedLoopResult run_closed_loop(const MpcConfig& cfg, const HalfCarParams& params,
                                 const RoadMeasurement& road, ControllerMode mode);

}  // namespace halfcar

#endif  // HALFCAR_MPC_HPP
