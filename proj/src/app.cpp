#include "halfcar/app.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace halfcar {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void state_columns(std::ofstream& out, const HalfCarState& s) {
  out << ',' << num(s.x1) << ',' << num(s.x2) << ',' << num(s.x3) << ',' << num(s.x4)
      << ',' << num(s.v1) << ',' << num(s.v2) << ',' << num(s.v3) << ',' << num(s.v4);
}

}  // namespace

void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "step,time,x1,x2,x3,x4,v1,v2,v3,v4,"
         "mx1,mx2,mx3,mx4,mv1,mv2,mv3,mv4,"
         "u1,u2,stage_cost,cum_cost,precompute_s,structure_change,clamps\n";
  for (const StepRecord& r : trace.steps) {
    out << r.step << ',' << num(r.time);
    state_columns(out, r.plant_state);
    state_columns(out, r.measured_state);
    out << ',' << num(r.applied.u1) << ',' << num(r.applied.u2) << ','
        << num(r.stage_cost) << ',' << num(r.cum_cost) << ','
        << num(r.precompute_seconds) << ',' << (r.structure_change ? 1 : 0) << ','
        << r.clamped_count << '\n';
  }
}

void write_jerk_csv(const std::string& path, const ClosedLoopTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "time,m3_jerk\n";
  for (const auto& [t, j] : trace.jerk) {
    const double ratio = t / kJerkSamplePeriod;
    if (std::abs(ratio - std::round(ratio)) > 1e-6) continue;
    out << num(t) << ',' << num(j) << '\n';
  }
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "mode,total_cost,improvement_pct,max_precompute_s,mean_precompute_s,"
         "structure_changes,clamps\n";
  for (const SummaryRow& r : rows) {
    out << to_string(r.summary.mode) << ',' << num(r.summary.total_cost) << ','
        << num(r.improvement_pct) << ',' << num(r.summary.max_precompute_s) << ','
        << num(r.summary.mean_precompute_s) << ',' << r.summary.structure_changes
        << ',' << r.summary.clamp_events << '\n';
  }
}

RoadMeasurement road_for_config(const RunConfig& cfg) {
  if (cfg.road_from_file) return load_road_csv(cfg.road_file);
  return generate_synthetic_road(cfg.synthetic);
}

int run_app(const std::string& config_path, const RunOverrides& overrides,
            std::ostream& log, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_run_config(config_path);
    if (overrides.seed) cfg.mpc.seed = *overrides.seed;
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    const auto diags = validate_run_config(config_path);
    if (!diags.empty()) {
      for (const std::string& d : diags) err << "config error: " << d << '\n';
      return kExitConfigError;
    }
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    std::filesystem::create_directories(cfg.out_dir);
  } catch (const std::exception& e) {
    err << "config error: cannot create output directory '" << cfg.out_dir
        << "': " << e.what() << '\n';
    return kExitConfigError;
  }

  const RoadMeasurement road = [&] {
    return road_for_config(cfg);
  }();

  std::vector<SummaryRow> rows;
  std::optional<double> nominal_cost;
  for (ControllerMode mode : cfg.modes) {
    const std::string trace_path =
        (std::filesystem::path(cfg.out_dir) / ("trace_" + to_string(mode) + ".csv")).string();
    const std::string jerk_path =
        (std::filesystem::path(cfg.out_dir) / ("jerk_" + to_string(mode) + ".csv")).string();
    ClosedLoopEngine engine(cfg.mpc, cfg.vehicle, road, mode);
    try {
      while (!engine.done()) engine.step();
    } catch (const std::exception& e) {
      err << "runtime error in mode " << to_string(mode) << ": " << e.what() << '\n';
      write_trace_csv(trace_path, engine.trace());  // flush the partial trace
      write_jerk_csv(jerk_path, engine.trace());
      return kExitRuntimeError;
    }
    write_trace_csv(trace_path, engine.trace());
    write_jerk_csv(jerk_path, engine.trace());

    SummaryRow row;
    row.summary = engine.summary();
    if (mode == ControllerMode::Nominal) nominal_cost = row.summary.total_cost;
    rows.push_back(row);

    log << to_string(mode) << ": total cost " << num(row.summary.total_cost)
        << ", precompute max " << num(row.summary.max_precompute_s) << " s / mean "
        << num(row.summary.mean_precompute_s) << " s against a budget of "
        << num(row.summary.realtime_budget_s) << " s, " << row.summary.structure_changes
        << " structure changes, " << row.summary.clamp_events << " clamps, "
        << row.summary.solver_faults << " solver faults\n";
  }

  for (SummaryRow& row : rows) {
    if (nominal_cost && *nominal_cost > 0.0) {
      row.improvement_pct =
          100.0 * (*nominal_cost - row.summary.total_cost) / *nominal_cost;
    }
    if (row.summary.mode == ControllerMode::Nominal) row.improvement_pct = 0.0;
  }
  const std::string summary_path =
      (std::filesystem::path(cfg.out_dir) / "summary.csv").string();
  write_summary_csv(summary_path, rows);
  log << "summary written to " << summary_path << '\n';
  return kExitOk;
}

int validate_app(const std::string& config_path, std::ostream& log) {
  const auto diags = validate_run_config(config_path);
  if (diags.empty()) {
    log << "ok\n";
    return kExitOk;
  }
  for (const std::string& d : diags) log << d << '\n';
  return kExitConfigError;
}

}  // namespace halfcar
