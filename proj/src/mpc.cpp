#include "halfcar/mpc.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>

namespace halfcar {

namespace {

double splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return double(z >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t channel, std::uint64_t k) {
  std::uint64_t s = seed ^ (channel * 0x9e3779b97f4a7c15ull) ^ (k + 1);
  // one scramble round so nearby (seed, k) pairs decorrelate
  s += 0x9e3779b97f4a7c15ull;
  s = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9ull;
  s = (s ^ (s >> 27)) * 0x94d049bb133111ebull;
  return s ^ (s >> 31);
}

/// One uniform draw in [-1, 1] per component; positions scaled by amp_pos,
/// velocities by amp_vel. Always consumes exactly 8 draws.
Vector8d draw_state_noise(std::uint64_t& stream, double amp_pos, double amp_vel) {
  Vector8d xi;
  for (int i = 0; i < 8; ++i) {
    const double u = 2.0 * splitmix64(stream) - 1.0;
    xi[i] = u * (i < 4 ? amp_pos : amp_vel);
  }
  return xi;
}

DecisionVector shift_plan(const DecisionVector& z, int shift) {
  const int n_int = int(z.size()) / 2;
  DecisionVector out(z.size());
  for (int k = 0; k < n_int; ++k) {
    const int src = std::min(k + shift, n_int - 1);
    out[2 * k] = z[2 * src];
    out[2 * k + 1] = z[2 * src + 1];
  }
  return out;
}

}  // namespace

std::string to_string(ControllerMode mode) {
  switch (mode) {
    case ControllerMode::Nominal: return "nominal";
    case ControllerMode::SensitivityUpdate: return "sensitivity_update";
    case ControllerMode::FullReoptimization: return "full_reoptimization";
  }
  return "unknown";
}

ControllerMode mode_from_string(const std::string& name) {
  if (name == "nominal") return ControllerMode::Nominal;
  if (name == "sensitivity_update") return ControllerMode::SensitivityUpdate;
  if (name == "full_reoptimization") return ControllerMode::FullReoptimization;
  throw InvalidConfigError("unknown controller mode: " + name);
}

void MpcConfig::validate() const {
  if (prediction_lead < 1) throw InvalidConfigError("prediction_lead must be >= 1");
  if (run_length < 0) throw InvalidConfigError("run_length must be >= 0");
  if (plant_substep_multiplier < 1) {
    throw InvalidConfigError("plant_substep_multiplier must be >= 1");
  }
  if (!(road_cutoff_hz > 0.0)) throw InvalidConfigError("road cutoff must be positive");
  if (delay.delta < 0.0) throw InvalidConfigError("axle delay must be >= 0");
  const DisturbanceConfig& d = disturbance;
  if (d.state_meas_pos < 0 || d.state_meas_vel < 0 || d.plant_state_pos < 0 ||
      d.plant_state_vel < 0 || d.road_meas < 0) {
    throw InvalidConfigError("disturbance amplitudes must be >= 0");
  }
  ocp.validate();
}

HalfCarState predict_initial_state(const IntegratorConfig& cfg,
                                   const HalfCarParams& p,
                                   const HalfCarState& measured,
                                   std::span<const DamperControl> committed,
                                   const RoadSignal& front, const RoadSignal& rear,
                                   double t) {
  AugmentedState s{measured, 0.0, 0.0};
  double tk = t;
  for (const DamperControl& u : committed) {
    s = step_sample(cfg, p, s, u, front, rear, tk);
    tk += cfg.sampling_period;
  }
  return s.car;
}

ClosedLoopEngine::ClosedLoopEngine(const MpcConfig& cfg, const HalfCarParams& params,
                                   const RoadMeasurement& road, ControllerMode mode)
    : cfg_(cfg), params_(params), mode_(mode), road_(road) {
  cfg_.validate();
  params_.validate();
  trace_.mode = mode;

  true_front_ = reconstruct(road_, cfg_.road_cutoff_hz);
  true_rear_ = rear_wheel_signal(true_front_, cfg_.delay);

  const double T = cfg_.ocp.integrator.sampling_period;
  const int N = cfg_.ocp.horizon;
  const double need_begin = -cfg_.delay.delta;
  const double need_end =
      std::max(cfg_.run_length * T, (cfg_.run_length - 1 + N) * T);
  if (cfg_.run_length > 0 &&
      (true_front_.window_begin() > need_begin + 1e-12 ||
       true_front_.window_end() < need_end - 1e-12)) {
    throw SchedulingError(
        "road data covers [" + std::to_string(true_front_.window_begin()) + ", " +
        std::to_string(true_front_.window_end()) + "] but the run needs [" +
        std::to_string(need_begin) + ", " + std::to_string(need_end) + "]");
  }

  plant_integrator_ = cfg_.ocp.integrator;
  plant_integrator_.substeps_per_sample *= cfg_.plant_substep_multiplier;

  if (cfg_.run_length > 0) {
    plant_ = AugmentedState{static_equilibrium(params_, true_front_.height(0.0)), 0.0, 0.0};
  }
  last_applied_ = DamperControl{std::clamp(1000.0, cfg_.ocp.u_min, cfg_.ocp.u_max),
                                std::clamp(1000.0, cfg_.ocp.u_min, cfg_.ocp.u_max)};
  jump_stream_ = derive_seed(cfg_.seed, 0x4A554D50ull, 0);
  meas_stream_ = derive_seed(cfg_.seed, 0x4D454153ull, 0);

  if (cfg_.disturbance.road_meas == 0.0) {
    view_front_ = true_front_;
    view_rear_ = true_rear_;
  } else {
    RoadMeasurement noisy = road_;
    noisy.heights = perturb_uniform(road_.heights, cfg_.disturbance.road_meas,
                                    derive_seed(cfg_.seed, 0x524F4144ull, 0));
    view_front_ = reconstruct(noisy, cfg_.road_cutoff_hz);
    view_rear_ = rear_wheel_signal(view_front_, cfg_.delay);
  }
}

const StepRecord& ClosedLoopEngine::step() {
  if (done()) throw SchedulingError("closed loop already finished");
  const int k = next_step_;
  const double T = cfg_.ocp.integrator.sampling_period;
  const int N = cfg_.ocp.horizon;
  const int lead = cfg_.prediction_lead;
  const double t = k * T;

  // true-state jumps, then the measurement of the jumped state
  const Vector8d jump = draw_state_noise(jump_stream_, cfg_.disturbance.plant_state_pos,
                                         cfg_.disturbance.plant_state_vel);
  plant_.car = HalfCarState::from_vector(plant_.car.to_vector() + jump);
  const Vector8d noise = draw_state_noise(meas_stream_, cfg_.disturbance.state_meas_pos,
                                          cfg_.disturbance.state_meas_vel);
  const HalfCarState measured = HalfCarState::from_vector(plant_.car.to_vector() + noise);
  const HalfCarState plant_at_start = plant_.car;
  const RoadSignal& view_front = view_front_;
  const RoadSignal& view_rear = view_rear_;

  const auto t_start = std::chrono::steady_clock::now();
  int iterations = 0;
  bool fault = false;
  bool structure_flag = false;
  int clamps = 0;

  // prime the pipeline with one solve at t = 0; its first `lead` controls
  // run open loop in every mode
  if (k == 0) {
    const HorizonRoad w0 = sample_horizon_road(view_front, view_rear, 0.0, N, T);
    const BoxProblem prob = make_box_problem(cfg_.ocp, params_, measured, w0);
    const double mid = 0.5 * (cfg_.ocp.u_min + cfg_.ocp.u_max);
    DecisionVector z0 = DecisionVector::Constant(2 * N, mid);
    DecisionVector plan;
    bool prime_fault = false;
    std::optional<KktPoint> point;
    try {
      KktPoint kp = solve(cfg_.solver, prob, z0);
      iterations += kp.iterations;
      plan = kp.z;
      point = std::move(kp);
    } catch (NonconvergenceError& e) {
      iterations += e.best.iterations;
      plan = e.best.z;
      prime_fault = true;
    }
    for (int j = 0; j < lead && j < cfg_.run_length; ++j) {
      Pending pend;
      pend.target_step = j;
      pend.plan = shift_plan(plan, j);
      pend.first = DamperControl{pend.plan[0], pend.plan[1]};
      if (j == 0) pend.point = point;
      pend.fault = prime_fault;
      pending_.push_back(std::move(pend));
    }
  }

  // apply stage
  if (pending_.empty() || pending_.front().target_step != k) {
    throw SchedulingError("no precomputed solution for step " + std::to_string(k));
  }
  Pending pend = std::move(pending_.front());
  pending_.pop_front();
  DamperControl u = pend.first;
  fault = pend.fault;

  if (k >= lead) {
    if (mode_ == ControllerMode::SensitivityUpdate) {
      if (pend.bundle && pend.bundle->regular && !pend.fault) {
        const SensitivityBundle& b = *pend.bundle;
        const HorizonRoad w_meas = sample_horizon_road(view_front, view_rear, t, N, T);
        const UpdateReport report = apply_update(b, measured, w_meas, cfg_.trust);
        const bool out_of_trust =
            report.state_deviation_norm > cfg_.trust.state_norm ||
            report.road_deviation_norm > cfg_.trust.road_norm;
        const Eigen::VectorXd raw = b.base_u +
                                    b.du_dx * (measured.to_vector() - b.base_x) +
                                    b.du_dw * (w_meas.to_flat() - b.base_w);
        structure_flag = detect_structure_change(pend.bundle.value(), raw,
                                                 cfg_.structure_check_index);
        if (out_of_trust) {
          structure_flag = true;  // outside the linearization's trust region:
                                  // fall back to the nominal control
        } else {
          // The full first-order step frequently overshoots into the bounds
          // when deviations are at the disturbance scale, so the state and
          // road corrections are damped by whichever step lengths look best
          // on the freshly measured data; (0, 0) keeps the nominal control,
          // so this selection never does worse on the measured horizon.
          const Eigen::VectorXd step_x = b.du_dx * (measured.to_vector() - b.base_x);
          const Eigen::VectorXd step_w = b.du_dw * (w_meas.to_flat() - b.base_w);
          const double j_nominal = objective(cfg_.ocp, params_, measured, pend.plan, w_meas);
          // the measured horizon is a proxy for the true one (the next jumps
          // are unknowable), so a candidate must beat the nominal plan by a
          // clear margin before it replaces it
          double best_cost = (std::getenv("HALFCAR_MARGIN") ? std::atof(std::getenv("HALFCAR_MARGIN")) : 0.9) * j_nominal;
          bool took_update = false;
          Eigen::VectorXd best_z = pend.plan;
          int best_clamps = 0;
          const std::vector<double> gx_grid{1.0, 0.875, 0.75, 0.625, 0.5,
                                            0.375, 0.25, 0.125, 0.0};
          const std::vector<double> gt_grid{1.0, 0.5, 0.25, 0.0};
          const Eigen::VectorXd step_full = step_x + step_w;
          for (double gx : gx_grid) {
            for (double gt : gt_grid) {
              if (gx == 0.0 && gt == 0.0) continue;
              Eigen::VectorXd cand_raw = b.base_u;
              cand_raw.head(2) += gx * step_full.head(2);
              cand_raw.tail(cand_raw.size() - 2) += gt * step_full.tail(cand_raw.size() - 2);
              const Eigen::VectorXd cand =
                  cand_raw.cwiseMax(b.lower).cwiseMin(b.upper);
              const double j_cand = objective(cfg_.ocp, params_, measured, cand, w_meas);
              if (j_cand < best_cost) {
                best_cost = j_cand;
                best_z = cand;
                took_update = true;
                best_clamps = int((cand_raw.array() < b.lower.array() ||
                                   cand_raw.array() > b.upper.array())
                                      .count());
              }
            }
          }
          if (!took_update) best_cost = j_nominal;
          u = DamperControl{best_z[0], best_z[1]};
          clamps = best_clamps;
          if (std::getenv("HALFCAR_DEBUG")) {
            std::fprintf(stderr,
                         "[upd k=%d] |dx|=%.3g |dw|=%.3g struct=%d Jnom=%.4g Jupd=%.4g\n",
                         k, report.state_deviation_norm, report.road_deviation_norm,
                         int(structure_flag), j_nominal, best_cost);
          }
        }
      } else if (pend.bundle && !pend.bundle->regular) {
        structure_flag = true;  // update refused, nominal control applied
        if (std::getenv("HALFCAR_DEBUG")) {
          std::fprintf(stderr, "[upd k=%d] bundle not regular\n", k);
        }
      } else if (std::getenv("HALFCAR_DEBUG")) {
        std::fprintf(stderr, "[upd k=%d] no bundle (fault=%d)\n", k, int(pend.fault));
      }
    } else if (mode_ == ControllerMode::FullReoptimization) {
      const HorizonRoad w_meas = sample_horizon_road(view_front, view_rear, t, N, T);
      const BoxProblem prob = make_box_problem(cfg_.ocp, params_, measured, w_meas);
      try {
        const KktPoint kp = solve(cfg_.solver, prob, pend.plan);
        iterations += kp.iterations;
        u = DamperControl{kp.z[0], kp.z[1]};
      } catch (NonconvergenceError& e) {
        iterations += e.best.iterations;
        fault = true;
        u = last_applied_;  // fault-tolerant hold
        if (std::getenv("HALFCAR_DEBUG")) {
          std::fprintf(stderr, "[reopt k=%d] %s\n", k, e.what());
        }
      }
    }
  }
  u.u1 = std::clamp(u.u1, cfg_.ocp.u_min, cfg_.ocp.u_max);
  u.u2 = std::clamp(u.u2, cfg_.ocp.u_min, cfg_.ocp.u_max);

  // precompute stage for step k + lead
  const int target = k + lead;
  if (target < cfg_.run_length) {
    std::vector<DamperControl> committed;
    committed.push_back(u);
    for (int i = 1; i < lead; ++i) {
      const std::size_t idx = i - 1;
      if (idx >= pending_.size() || pending_[idx].target_step != k + i) {
        throw SchedulingError("committed control missing for step " + std::to_string(k + i));
      }
      committed.push_back(pending_[idx].first);
    }
    const HalfCarState predicted = predict_initial_state(
        cfg_.ocp.integrator, params_, measured, committed, view_front, view_rear, t);
    const HorizonRoad w_nom =
        sample_horizon_road(view_front, view_rear, target * T, N, T);
    const DecisionVector warm = shift_plan(
        pending_.empty() ? pend.plan : pending_.back().plan, 1);

    Pending next;
    next.target_step = target;
    const BoxProblem prob = make_box_problem(cfg_.ocp, params_, predicted, w_nom);
    try {
      KktPoint kp = solve(cfg_.solver, prob, warm);
      iterations += kp.iterations;
      next.plan = kp.z;
      next.first = DamperControl{kp.z[0], kp.z[1]};
      if (mode_ == ControllerMode::SensitivityUpdate) {
        ParametricProblem pp = make_parametric_problem(cfg_.ocp, params_);
        Eigen::VectorXd theta(8 + 4 * (N + 1));
        theta.head(8) = predicted.to_vector();
        theta.tail(4 * (N + 1)) = w_nom.to_flat();
        pp.theta0 = theta;
        try {
          next.bundle = compute_sensitivities(pp, kp);
        } catch (const SensitivityUnavailableError&) {
          next.bundle.reset();
        }
      }
      next.point = std::move(kp);
    } catch (NonconvergenceError& e) {
      iterations += e.best.iterations;
      next.plan = e.best.z;
      next.first = DamperControl{e.best.z[0], e.best.z[1]};
      next.fault = true;
    }
    pending_.push_back(std::move(next));
  }
  const auto t_end = std::chrono::steady_clock::now();
  const double precompute_s =
      cfg_.record_timing ? std::chrono::duration<double>(t_end - t_start).count() : 0.0;

  // plant advance over [t, t+T] under the true road
  const double h_plant = T / plant_integrator_.substeps_per_sample;
  const bool final_interval = (k == cfg_.run_length - 1);
  const double old_handling = plant_.handling_cost;
  const double old_comfort = plant_.comfort_cost;
  NodeObserver observer = [&](double tt, const AugmentedState& s) {
    if (!final_interval && tt > t + T - 0.25 * h_plant) return;  // next interval re-records it
    const auto [w1, w1d] = true_front_.eval(tt);
    const auto [w2, w2d] = true_rear_.eval(tt);
    const double jerk =
        chassis_jerk(params_, s.car, u, RoadPoint{w1, w2, w1d, w2d});
    trace_.jerk.emplace_back(tt, params_.m3 * jerk);
  };
  plant_ = step_sample(plant_integrator_, params_, plant_, u, true_front_, true_rear_, t,
                       observer);
  const double stage_cost =
      cfg_.ocp.mu_handling * (plant_.handling_cost - old_handling) +
      cfg_.ocp.mu_comfort * (plant_.comfort_cost - old_comfort);
  cum_cost_ += stage_cost;

  StepRecord rec;
  rec.step = k;
  rec.time = t;
  rec.plant_state = plant_at_start;
  rec.measured_state = measured;
  rec.applied = u;
  rec.stage_cost = stage_cost;
  rec.cum_cost = cum_cost_;
  rec.solver_iterations = iterations;
  rec.precompute_seconds = precompute_s;
  rec.structure_change = structure_flag;
  rec.clamped_count = clamps;
  rec.solver_fault = fault;
  trace_.steps.push_back(rec);
  precompute_times_.push_back(precompute_s);
  last_applied_ = u;
  ++next_step_;
  return trace_.steps.back();
}

RunSummary ClosedLoopEngine::summary() const {
  RunSummary s;
  s.mode = mode_;
  s.total_cost = cum_cost_;
  s.realtime_budget_s = 2.0 * cfg_.ocp.integrator.sampling_period;
  for (const StepRecord& r : trace_.steps) {
    s.max_precompute_s = std::max(s.max_precompute_s, r.precompute_seconds);
    s.mean_precompute_s += r.precompute_seconds;
    s.structure_changes += r.structure_change ? 1 : 0;
    s.clamp_events += r.clamped_count;
    s.solver_faults += r.solver_fault ? 1 : 0;
  }
  if (!trace_.steps.empty()) s.mean_precompute_s /= double(trace_.steps.size());
  return s;
}

ClosedLoopResult run_closed_loop(const MpcConfig& cfg, const HalfCarParams& params,
                                 const RoadMeasurement& road, ControllerMode mode) {
  ClosedLoopEngine engine(cfg, params, road, mode);
  while (!engine.done()) engine.step();
  return ClosedLoopResult{engine.trace(), engine.summary()};
}

}  // namespace halfcar
