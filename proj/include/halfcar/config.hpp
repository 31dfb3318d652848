#ifndef HALFCAR_CONFIG_HPP
#define HALFCAR_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "halfcar/mpc.hpp"

namespace halfcar {

/// Everything a batch run needs: controller configuration, road source,
/// disturbances, output location and the list of modes to compare.
struct RunConfig {
  MpcConfig mpc;
  HalfCarParams vehicle;
  std::vector<ControllerMode> modes = {ControllerMode::Nominal,
                                       ControllerMode::SensitivityUpdate,
                                       ControllerMode::FullReoptimization};
  std::string out_dir = "out";

  // road source: a CSV file or the synthetic generator
  bool road_from_file = false;
  std::string road_file;
  SyntheticRoadSpec synthetic;
  double vehicle_speed = 20.0;  ///< [m/s]; rear delay = (a+b)/speed
};

/// Parses the key = value configuration file (sections in brackets, '#'
/// comments). Unknown sections or keys and malformed values raise
/// InvalidConfigError with a file:line prefix.
RunConfig parse_run_config(const std::string& path);

/// Schema and cross-field checks without running anything. Returns an empty
/// list when the configuration is runnable.
std::vector<std::string> validate_run_config(const std::string& path);

/// The jerk output grid [s]; plant integration nodes must land on it.
inline constexpr double kJerkSamplePeriod = 0.002;

}  // namespace halfcar

#endif  // HALFCAR_CONFIG_HPP
