#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "halfcar/app.hpp"
#include "halfcar/mpc.hpp"

namespace py = pybind11;
using namespace halfcar;

namespace {

// python-friendly front ends that keep the std::function problem plumbing
// on the C++ side
KktPoint solve_horizon_nlp(const OcpConfig& ocp, const HalfCarParams& params,
                           const HalfCarState& x0, const HorizonRoad& road,
                           const Eigen::VectorXd& z_init, const SolverConfig& solver) {
  return solve(solver, make_box_problem(ocp, params, x0, road), z_init);
}

SensitivityBundle horizon_sensitivities(const OcpConfig& ocp, const HalfCarParams& params,
                                        const HalfCarState& x0, const HorizonRoad& road,
                                        const KktPoint& point) {
  ParametricProblem pp = make_parametric_problem(ocp, params);
  Eigen::VectorXd theta(8 + 4 * (ocp.horizon + 1));
  theta.head(8) = x0.to_vector();
  theta.tail(4 * (ocp.horizon + 1)) = road.to_flat();
  pp.theta0 = theta;
  return compute_sensitivities(pp, point);
}

}  // namespace

PYBIND11_MODULE(halfcar, m) {
  m.doc() = "Half-car active-suspension NMPC with parametric sensitivity updates";

  py::register_exception<Error>(m, "HalfcarError");

  py::class_<HalfCarParams>(m, "HalfCarParams")
      .def(py::init<>())
      .def_readwrite("a", &HalfCarParams::a)
      .def_readwrite("b", &HalfCarParams::b)
      .def_readwrite("m1", &HalfCarParams::m1)
      .def_readwrite("m2", &HalfCarParams::m2)
      .def_readwrite("m3", &HalfCarParams::m3)
      .def_readwrite("inertia", &HalfCarParams::inertia)
      .def_readwrite("k1", &HalfCarParams::k1)
      .def_readwrite("k2", &HalfCarParams::k2)
      .def_readwrite("d1", &HalfCarParams::d1)
      .def_readwrite("d2", &HalfCarParams::d2)
      .def_readwrite("k3", &HalfCarParams::k3)
      .def_readwrite("k4", &HalfCarParams::k4)
      .def_readwrite("g", &HalfCarParams::g)
      .def("validate", &HalfCarParams::validate);

  py::class_<HalfCarState>(m, "HalfCarState")
      .def(py::init<>())
      .def_readwrite("x1", &HalfCarState::x1)
      .def_readwrite("x2", &HalfCarState::x2)
      .def_readwrite("x3", &HalfCarState::x3)
      .def_readwrite("x4", &HalfCarState::x4)
      .def_readwrite("v1", &HalfCarState::v1)
      .def_readwrite("v2", &HalfCarState::v2)
      .def_readwrite("v3", &HalfCarState::v3)
      .def_readwrite("v4", &HalfCarState::v4)
      .def("to_vector", &HalfCarState::to_vector)
      .def_static("from_vector", &HalfCarState::from_vector);

  py::class_<DamperControl>(m, "DamperControl")
      .def(py::init<>())
      .def(py::init([](double u1, double u2) { return DamperControl{u1, u2}; }))
      .def_readwrite("u1", &DamperControl::u1)
      .def_readwrite("u2", &DamperControl::u2);

  py::class_<RoadPoint>(m, "RoadPoint")
      .def(py::init<>())
      .def(py::init([](double w1, double w2, double w1dot, double w2dot) {
        return RoadPoint{w1, w2, w1dot, w2dot};
      }))
      .def_readwrite("w1", &RoadPoint::w1)
      .def_readwrite("w2", &RoadPoint::w2)
      .def_readwrite("w1dot", &RoadPoint::w1dot)
      .def_readwrite("w2dot", &RoadPoint::w2dot);

  py::class_<ForceSet>(m, "ForceSet")
      .def_readonly("f1", &ForceSet::f1)
      .def_readonly("f2", &ForceSet::f2)
      .def_readonly("f3", &ForceSet::f3)
      .def_readonly("f4", &ForceSet::f4);

  py::class_<NominalForces>(m, "NominalForces")
      .def_readonly("front", &NominalForces::front)
      .def_readonly("rear", &NominalForces::rear);

  m.attr("DAMPER_MIN") = kDamperMin;
  m.attr("DAMPER_MAX") = kDamperMax;
  m.def("suspension_forces", &suspension_forces);
  m.def("dynamics_rhs", &dynamics_rhs);
  m.def("chassis_jerk", &chassis_jerk);
  m.def("static_equilibrium", &static_equilibrium);
  m.def("nominal_forces", &nominal_forces);

  py::class_<RoadMeasurement>(m, "RoadMeasurement")
      .def(py::init<>())
      .def_readwrite("sample_period", &RoadMeasurement::sample_period)
      .def_readwrite("start_time", &RoadMeasurement::start_time)
      .def_readwrite("heights", &RoadMeasurement::heights)
      .def("end_time", &RoadMeasurement::end_time);

  py::class_<RoadSignal>(m, "RoadSignal")
      .def("eval", &RoadSignal::eval)
      .def("height", &RoadSignal::height)
      .def("rate", &RoadSignal::rate)
      .def("window_begin", &RoadSignal::window_begin)
      .def("window_end", &RoadSignal::window_end)
      .def_static("flat", &RoadSignal::flat);

  py::class_<AxleDelay>(m, "AxleDelay")
      .def(py::init([](double delta) { return AxleDelay{delta}; }))
      .def_readwrite("delta", &AxleDelay::delta);

  py::class_<BumpComponent>(m, "BumpComponent")
      .def(py::init([](double center, double width, double height) {
        return BumpComponent{center, width, height};
      }))
      .def_readwrite("center", &BumpComponent::center)
      .def_readwrite("width", &BumpComponent::width)
      .def_readwrite("height", &BumpComponent::height);

  py::class_<SyntheticRoadSpec>(m, "SyntheticRoadSpec")
      .def(py::init<>())
      .def_readwrite("start_time", &SyntheticRoadSpec::start_time)
      .def_readwrite("end_time", &SyntheticRoadSpec::end_time)
      .def_readwrite("sample_period", &SyntheticRoadSpec::sample_period)
      .def_readwrite("wave_count", &SyntheticRoadSpec::wave_count)
      .def_readwrite("wave_amplitude", &SyntheticRoadSpec::wave_amplitude)
      .def_readwrite("freq_min_hz", &SyntheticRoadSpec::freq_min_hz)
      .def_readwrite("freq_max_hz", &SyntheticRoadSpec::freq_max_hz)
      .def_readwrite("seed", &SyntheticRoadSpec::seed)
      .def_readwrite("bumps", &SyntheticRoadSpec::bumps);

  m.def("reconstruct", &reconstruct, py::arg("measurement"), py::arg("cutoff_hz"));
  m.def("rear_wheel_signal", &rear_wheel_signal);
  m.def("band_spectral_amplitude", &band_spectral_amplitude);
  m.def("perturb_uniform",
        [](const std::vector<double>& values, double amplitude, std::uint64_t seed) {
          return perturb_uniform(values, amplitude, seed);
        });
  m.def("load_road_csv", &load_road_csv);
  m.def("generate_synthetic_road", &generate_synthetic_road);

  py::class_<IntegratorConfig>(m, "IntegratorConfig")
      .def(py::init<>())
      .def_readwrite("substeps_per_sample", &IntegratorConfig::substeps_per_sample)
      .def_readwrite("sampling_period", &IntegratorConfig::sampling_period);

  py::class_<AugmentedState>(m, "AugmentedState")
      .def(py::init<>())
      .def(py::init([](const HalfCarState& car) { return AugmentedState{car, 0.0, 0.0}; }))
      .def_readwrite("car", &AugmentedState::car)
      .def_readwrite("handling_cost", &AugmentedState::handling_cost)
      .def_readwrite("comfort_cost", &AugmentedState::comfort_cost);

  m.def("step_sample",
        [](const IntegratorConfig& cfg, const HalfCarParams& p, const AugmentedState& s0,
           const DamperControl& u, const RoadSignal& front, const RoadSignal& rear,
           double t0) { return step_sample(cfg, p, s0, u, front, rear, t0); });
  m.def("rollout", [](const IntegratorConfig& cfg, const HalfCarParams& p,
                      const AugmentedState& s0, const std::vector<DamperControl>& controls,
                      const RoadSignal& front, const RoadSignal& rear, double t0) {
    return rollout(cfg, p, s0, controls, front, rear, t0);
  });

  py::class_<OcpConfig>(m, "OcpConfig")
      .def(py::init<>())
      .def_readwrite("horizon", &OcpConfig::horizon)
      .def_readwrite("mu_handling", &OcpConfig::mu_handling)
      .def_readwrite("mu_comfort", &OcpConfig::mu_comfort)
      .def_readwrite("u_min", &OcpConfig::u_min)
      .def_readwrite("u_max", &OcpConfig::u_max)
      .def_readwrite("integrator", &OcpConfig::integrator);

  py::class_<HorizonRoad>(m, "HorizonRoad")
      .def(py::init<>())
      .def_readwrite("front_height", &HorizonRoad::front_height)
      .def_readwrite("front_rate", &HorizonRoad::front_rate)
      .def_readwrite("rear_height", &HorizonRoad::rear_height)
      .def_readwrite("rear_rate", &HorizonRoad::rear_rate)
      .def("to_flat", &HorizonRoad::to_flat)
      .def_static("from_flat", &HorizonRoad::from_flat);

  m.def("sample_horizon_road", &sample_horizon_road);
  m.def("hermite_road_signal", &hermite_road_signal);

  py::enum_<FdScheme>(m, "FdScheme")
      .value("Forward", FdScheme::Forward)
      .value("Central", FdScheme::Central);

  m.def("objective", &objective);
  m.def("objective_gradient", &objective_gradient, py::arg("cfg"), py::arg("params"),
        py::arg("x0"), py::arg("z"), py::arg("road"),
        py::arg("scheme") = FdScheme::Forward);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("kkt_tolerance", &SolverConfig::kkt_tolerance)
      .def_readwrite("max_iterations", &SolverConfig::max_iterations)
      .def_readwrite("bfgs_reset_period", &SolverConfig::bfgs_reset_period);

  py::enum_<BoundStatus>(m, "BoundStatus")
      .value("Free", BoundStatus::Free)
      .value("AtLower", BoundStatus::AtLower)
      .value("AtUpper", BoundStatus::AtUpper);

  py::class_<KktPoint>(m, "KktPoint")
      .def_readonly("z", &KktPoint::z)
      .def_readonly("objective", &KktPoint::objective)
      .def_readonly("mult_lower", &KktPoint::mult_lower)
      .def_readonly("mult_upper", &KktPoint::mult_upper)
      .def_readonly("active_set", &KktPoint::active_set)
      .def_readonly("reduced_hessian", &KktPoint::reduced_hessian)
      .def_readonly("kkt_residual", &KktPoint::kkt_residual)
      .def_readonly("strict_complementarity", &KktPoint::strict_complementarity)
      .def_readonly("regular", &KktPoint::regular)
      .def_readonly("iterations", &KktPoint::iterations);

  m.def("solve_horizon_nlp", &solve_horizon_nlp, py::arg("ocp"), py::arg("params"),
        py::arg("x0"), py::arg("road"), py::arg("z_init"),
        py::arg("solver") = SolverConfig{});

  py::class_<SensitivityBundle>(m, "SensitivityBundle")
      .def_readonly("du_dx", &SensitivityBundle::du_dx)
      .def_readonly("du_dw", &SensitivityBundle::du_dw)
      .def_readonly("base_x", &SensitivityBundle::base_x)
      .def_readonly("base_w", &SensitivityBundle::base_w)
      .def_readonly("base_u", &SensitivityBundle::base_u)
      .def_readonly("regular", &SensitivityBundle::regular);

  py::class_<TrustThresholds>(m, "TrustThresholds")
      .def(py::init<>())
      .def_readwrite("state_norm", &TrustThresholds::state_norm)
      .def_readwrite("road_norm", &TrustThresholds::road_norm);

  py::class_<UpdateReport>(m, "UpdateReport")
      .def_readonly("updated_u", &UpdateReport::updated_u)
      .def_readonly("clamped_components", &UpdateReport::clamped_components)
      .def_readonly("structure_change", &UpdateReport::structure_change)
      .def_readonly("state_deviation_norm", &UpdateReport::state_deviation_norm)
      .def_readonly("road_deviation_norm", &UpdateReport::road_deviation_norm);

  m.def("horizon_sensitivities", &horizon_sensitivities);
  m.def("apply_update", &apply_update, py::arg("bundle"), py::arg("measured_x"),
        py::arg("measured_w"), py::arg("trust") = TrustThresholds{});
  m.def("detect_structure_change", &detect_structure_change, py::arg("bundle"),
        py::arg("candidate_raw_u"), py::arg("horizon_check_index") = 1);

  py::enum_<ControllerMode>(m, "ControllerMode")
      .value("Nominal", ControllerMode::Nominal)
      .value("SensitivityUpdate", ControllerMode::SensitivityUpdate)
      .value("FullReoptimization", ControllerMode::FullReoptimization);

  py::class_<DisturbanceConfig>(m, "DisturbanceConfig")
      .def(py::init<>())
      .def_readwrite("state_meas_pos", &DisturbanceConfig::state_meas_pos)
      .def_readwrite("state_meas_vel", &DisturbanceConfig::state_meas_vel)
      .def_readwrite("plant_state_pos", &DisturbanceConfig::plant_state_pos)
      .def_readwrite("plant_state_vel", &DisturbanceConfig::plant_state_vel)
      .def_readwrite("road_meas", &DisturbanceConfig::road_meas);

  py::class_<MpcConfig>(m, "MpcConfig")
      .def(py::init<>())
      .def_readwrite("prediction_lead", &MpcConfig::prediction_lead)
      .def_readwrite("run_length", &MpcConfig::run_length)
      .def_readwrite("seed", &MpcConfig::seed)
      .def_readwrite("ocp", &MpcConfig::ocp)
      .def_readwrite("solver", &MpcConfig::solver)
      .def_readwrite("plant_substep_multiplier", &MpcConfig::plant_substep_multiplier)
      .def_readwrite("disturbance", &MpcConfig::disturbance)
      .def_readwrite("road_cutoff_hz", &MpcConfig::road_cutoff_hz)
      .def_readwrite("delay", &MpcConfig::delay)
      .def_readwrite("trust", &MpcConfig::trust)
      .def_readwrite("record_timing", &MpcConfig::record_timing);

  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("step", &StepRecord::step)
      .def_readonly("time", &StepRecord::time)
      .def_readonly("plant_state", &StepRecord::plant_state)
      .def_readonly("measured_state", &StepRecord::measured_state)
      .def_readonly("applied", &StepRecord::applied)
      .def_readonly("stage_cost", &StepRecord::stage_cost)
      .def_readonly("cum_cost", &StepRecord::cum_cost)
      .def_readonly("solver_iterations", &StepRecord::solver_iterations)
      .def_readonly("precompute_seconds", &StepRecord::precompute_seconds)
      .def_readonly("structure_change", &StepRecord::structure_change)
      .def_readonly("clamped_count", &StepRecord::clamped_count)
      .def_readonly("solver_fault", &StepRecord::solver_fault);

  py::class_<ClosedLoopTrace>(m, "ClosedLoopTrace")
      .def_readonly("mode", &ClosedLoopTrace::mode)
      .def_readonly("steps", &ClosedLoopTrace::steps)
      .def_readonly("jerk", &ClosedLoopTrace::jerk);

  py::class_<RunSummary>(m, "RunSummary")
      .def_readonly("mode", &RunSummary::mode)
      .def_readonly("total_cost", &RunSummary::total_cost)
      .def_readonly("max_precompute_s", &RunSummary::max_precompute_s)
      .def_readonly("mean_precompute_s", &RunSummary::mean_precompute_s)
      .def_readonly("structure_changes", &RunSummary::structure_changes)
      .def_readonly("clamp_events", &RunSummary::clamp_events)
      .def_readonly("solver_faults", &RunSummary::solver_faults)
      .def_readonly("realtime_budget_s", &RunSummary::realtime_budget_s);

  py::class_<ClosedLoopResult>(m, "ClosedLoopResult")
      .def_readonly("trace", &ClosedLoopResult::trace)
      .def_readonly("summary", &ClosedLoopResult::summary);

  m.def("predict_initial_state",
        [](const IntegratorConfig& cfg, const HalfCarParams& p, const HalfCarState& measured,
           const std::vector<DamperControl>& committed, const RoadSignal& front,
           const RoadSignal& rear, double t) {
          return predict_initial_state(cfg, p, measured, committed, front, rear, t);
        });
  m.def("run_closed_loop", &run_closed_loop, py::arg("config"), py::arg("params"),
        py::arg("road"), py::arg("mode"),
        py::call_guard<py::gil_scoped_release>());

  m.def("validate_run_config", &validate_run_config);
  m.def(
      "run_app",
      [](const std::string& config_path, std::optional<std::uint64_t> seed,
         std::optional<std::string> out_dir) {
        std::ostringstream log, err;
        const int rc = run_app(config_path, RunOverrides{seed, out_dir}, log, err);
        return py::make_tuple(rc, log.str(), err.str());
      },
      py::arg("config_path"), py::arg("seed") = std::nullopt,
      py::arg("out_dir") = std::nullopt);
}
