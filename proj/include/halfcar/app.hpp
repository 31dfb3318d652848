#ifndef HALFCAR_APP_HPP
#define HALFCAR_APP_HPP

#include <iosfwd>
#include <optional>
#include <string>

#include "halfcar/config.hpp"

namespace halfcar {

/// Exit codes of the batch front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

/// Runs every configured mode, writes trace_<mode>.csv, jerk_<mode>.csv and
/// summary.csv into the output directory and logs a per-mode timing line.
/// On a runtime failure the partial trace is flushed before returning.
int run_app(const std::string& config_path, const RunOverrides& overrides,
            std::ostream& log, std::ostream& err);

/// Prints diagnostics (or "ok") without running anything.
int validate_app(const std::string& config_path, std::ostream& log);

// CSV writers, exposed for tests
void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace);
void write_jerk_csv(const std::string& path, const ClosedLoopTrace& trace);

struct SummaryRow {
  RunSummary summary;
  double improvement_pct = 0.0;
};
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

/// The road measurement a configuration describes (synthetic or from file).
RoadMeasurement road_for_config(const RunConfig& cfg);

}  // namespace halfcar

#endif  // HALFCAR_APP_HPP
