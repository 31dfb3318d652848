#include "halfcar/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace halfcar {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

using SectionMap = std::map<std::string, std::map<std::string, Entry>>;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"run", {"modes", "run_length", "seed", "out_dir", "timing"}},
      {"horizon",
       {"N", "T", "mu_handling", "mu_comfort", "u_min", "u_max", "substeps"}},
      {"solver", {"kkt_tolerance", "max_iterations", "bfgs_reset_period"}},
      {"mpc",
       {"prediction_lead", "plant_substep_multiplier", "trust_state_norm",
        "trust_road_norm", "structure_check_index"}},
      {"road",
       {"source", "file", "speed", "cutoff_hz", "start_time", "end_time",
        "sample_period", "wave_count", "wave_amplitude", "freq_min_hz",
        "freq_max_hz", "road_seed", "bumps"}},
      {"disturbance",
       {"state_measurement_position", "state_measurement_velocity",
        "plant_state_position", "plant_state_velocity", "road_measurement"}},
      {"vehicle",
       {"a", "b", "m1", "m2", "m3", "inertia", "k1", "k2", "d1", "d2", "k3",
        "k4", "g"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
  throw InvalidConfigError(path + ":" + std::to_string(line) + ": " + msg);
}

SectionMap parse_sections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError(path + ": cannot open configuration file");
  SectionMap out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(path, lineno, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) fail(path, lineno, "unknown section [" + section + "]");
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(path, lineno, "expected key = value");
    if (section.empty()) fail(path, lineno, "key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!schema().at(section).count(key)) {
      fail(path, lineno, "unknown key '" + key + "' in section [" + section + "]");
    }
    if (out[section].count(key)) fail(path, lineno, "duplicate key '" + key + "'");
    out[section][key] = Entry{value, lineno};
  }
  return out;
}

class Reader {
 public:
  Reader(const std::string& path, const SectionMap& sections)
      : path_(path), sections_(sections) {}

  const Entry* find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  void get(const std::string& sec, const std::string& key, double& out) const {
    if (const Entry* e = find(sec, key)) {
      try {
        std::size_t pos = 0;
        out = std::stod(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(path_, e->line, "value of '" + key + "' is not a number: " + e->value);
      }
    }
  }
  void get(const std::string& sec, const std::string& key, int& out) const {
    if (const Entry* e = find(sec, key)) {
      try {
        std::size_t pos = 0;
        out = std::stoi(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(path_, e->line, "value of '" + key + "' is not an integer: " + e->value);
      }
    }
  }
  void get(const std::string& sec, const std::string& key, std::uint64_t& out) const {
    if (const Entry* e = find(sec, key)) {
      try {
        std::size_t pos = 0;
        out = std::stoull(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(path_, e->line, "value of '" + key + "' is not an unsigned integer: " + e->value);
      }
    }
  }
  void get(const std::string& sec, const std::string& key, std::string& out) const {
    if (const Entry* e = find(sec, key)) out = e->value;
  }

  const std::string& path() const { return path_; }

 private:
  const std::string& path_;
  const SectionMap& sections_;
};

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

RunConfig build(const Reader& r) {
  RunConfig cfg;
  cfg.mpc.run_length = 40;
  cfg.mpc.seed = 42;

  if (const Entry* e = r.find("run", "modes")) {
    cfg.modes.clear();
    for (const std::string& name : split_list(e->value, ',')) {
      try {
        cfg.modes.push_back(mode_from_string(name));
      } catch (const InvalidConfigError&) {
        fail(r.path(), e->line, "unknown mode '" + name + "'");
      }
    }
    if (cfg.modes.empty()) fail(r.path(), e->line, "modes list is empty");
  }
  r.get("run", "run_length", cfg.mpc.run_length);
  r.get("run", "seed", cfg.mpc.seed);
  r.get("run", "out_dir", cfg.out_dir);
  if (const Entry* e = r.find("run", "timing")) {
    if (e->value == "on") {
      cfg.mpc.record_timing = true;
    } else if (e->value == "off") {
      cfg.mpc.record_timing = false;
    } else {
      fail(r.path(), e->line, "timing must be 'on' or 'off', got '" + e->value + "'");
    }
  }

  r.get("horizon", "N", cfg.mpc.ocp.horizon);
  r.get("horizon", "T", cfg.mpc.ocp.integrator.sampling_period);
  r.get("horizon", "mu_handling", cfg.mpc.ocp.mu_handling);
  r.get("horizon", "mu_comfort", cfg.mpc.ocp.mu_comfort);
  r.get("horizon", "u_min", cfg.mpc.ocp.u_min);
  r.get("horizon", "u_max", cfg.mpc.ocp.u_max);
  r.get("horizon", "substeps", cfg.mpc.ocp.integrator.substeps_per_sample);

  r.get("solver", "kkt_tolerance", cfg.mpc.solver.kkt_tolerance);
  r.get("solver", "max_iterations", cfg.mpc.solver.max_iterations);
  r.get("solver", "bfgs_reset_period", cfg.mpc.solver.bfgs_reset_period);

  r.get("mpc", "prediction_lead", cfg.mpc.prediction_lead);
  r.get("mpc", "plant_substep_multiplier", cfg.mpc.plant_substep_multiplier);
  r.get("mpc", "trust_state_norm", cfg.mpc.trust.state_norm);
  r.get("mpc", "trust_road_norm", cfg.mpc.trust.road_norm);
  r.get("mpc", "structure_check_index", cfg.mpc.structure_check_index);

  std::string source = "synthetic";
  r.get("road", "source", source);
  if (source == "file") {
    cfg.road_from_file = true;
    r.get("road", "file", cfg.road_file);
    if (const Entry* e = r.find("road", "file"); !e || e->value.empty()) {
      throw InvalidConfigError(r.path() + ": road source 'file' needs a 'file' key");
    }
  } else if (source != "synthetic") {
    const Entry* e = r.find("road", "source");
    fail(r.path(), e ? e->line : 0, "road source must be 'synthetic' or 'file'");
  }
  r.get("road", "speed", cfg.vehicle_speed);
  r.get("road", "cutoff_hz", cfg.mpc.road_cutoff_hz);
  r.get("road", "start_time", cfg.synthetic.start_time);
  r.get("road", "end_time", cfg.synthetic.end_time);
  r.get("road", "sample_period", cfg.synthetic.sample_period);
  r.get("road", "wave_count", cfg.synthetic.wave_count);
  r.get("road", "wave_amplitude", cfg.synthetic.wave_amplitude);
  r.get("road", "freq_min_hz", cfg.synthetic.freq_min_hz);
  r.get("road", "freq_max_hz", cfg.synthetic.freq_max_hz);
  r.get("road", "road_seed", cfg.synthetic.seed);
  if (const Entry* e = r.find("road", "bumps")) {
    for (const std::string& item : split_list(e->value, ',')) {
      const auto parts = split_list(item, ':');
      if (parts.size() != 3) {
        fail(r.path(), e->line, "bump must be center:width:height, got '" + item + "'");
      }
      try {
        cfg.synthetic.bumps.push_back(BumpComponent{
            std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])});
      } catch (const std::exception&) {
        fail(r.path(), e->line, "non-numeric bump component in '" + item + "'");
      }
    }
  }

  r.get("disturbance", "state_measurement_position", cfg.mpc.disturbance.state_meas_pos);
  r.get("disturbance", "state_measurement_velocity", cfg.mpc.disturbance.state_meas_vel);
  r.get("disturbance", "plant_state_position", cfg.mpc.disturbance.plant_state_pos);
  r.get("disturbance", "plant_state_velocity", cfg.mpc.disturbance.plant_state_vel);
  r.get("disturbance", "road_measurement", cfg.mpc.disturbance.road_meas);

  r.get("vehicle", "a", cfg.vehicle.a);
  r.get("vehicle", "b", cfg.vehicle.b);
  r.get("vehicle", "m1", cfg.vehicle.m1);
  r.get("vehicle", "m2", cfg.vehicle.m2);
  r.get("vehicle", "m3", cfg.vehicle.m3);
  r.get("vehicle", "inertia", cfg.vehicle.inertia);
  r.get("vehicle", "k1", cfg.vehicle.k1);
  r.get("vehicle", "k2", cfg.vehicle.k2);
  r.get("vehicle", "d1", cfg.vehicle.d1);
  r.get("vehicle", "d2", cfg.vehicle.d2);
  r.get("vehicle", "k3", cfg.vehicle.k3);
  r.get("vehicle", "k4", cfg.vehicle.k4);
  r.get("vehicle", "g", cfg.vehicle.g);

  if (!(cfg.vehicle_speed > 0.0)) {
    throw InvalidConfigError(r.path() + ": road speed must be positive");
  }
  cfg.mpc.delay = AxleDelay{(cfg.vehicle.a + cfg.vehicle.b) / cfg.vehicle_speed};
  return cfg;
}

}  // namespace

RunConfig parse_run_config(const std::string& path) {
  const SectionMap sections = parse_sections(path);
  const Reader r(path, sections);
  return build(r);
}

std::vector<std::string> validate_run_config(const std::string& path) {
  std::vector<std::string> diags;
  RunConfig cfg;
  try {
    cfg = parse_run_config(path);
  } catch (const Error& e) {
    diags.push_back(e.what());
    return diags;
  }

  try {
    cfg.vehicle.validate();
  } catch (const Error& e) {
    diags.push_back(std::string("vehicle: ") + e.what());
  }
  try {
    cfg.mpc.validate();
  } catch (const Error& e) {
    diags.push_back(std::string("mpc: ") + e.what());
  }
  if (!(cfg.mpc.ocp.u_min < cfg.mpc.ocp.u_max)) {
    diags.push_back("horizon: u_min must be strictly below u_max (u_min=" +
                    std::to_string(cfg.mpc.ocp.u_min) + ", u_max=" +
                    std::to_string(cfg.mpc.ocp.u_max) + ")");
  }

  const double sample = cfg.road_from_file ? 0.002 : cfg.synthetic.sample_period;
  double nyquist = 0.5 / sample;
  if (cfg.road_from_file) {
    try {
      const RoadMeasurement m = load_road_csv(cfg.road_file);
      nyquist = 0.5 / m.sample_period;
    } catch (const Error& e) {
      diags.push_back(std::string("road file: ") + e.what());
    }
  }
  if (cfg.mpc.road_cutoff_hz > nyquist + 1e-12) {
    diags.push_back("road: cutoff_hz " + std::to_string(cfg.mpc.road_cutoff_hz) +
                    " exceeds the Nyquist frequency " + std::to_string(nyquist) +
                    " of the " + std::to_string(sample) + " s sampling");
  }

  // plant integration nodes must land on the jerk output grid
  const double h_plant = cfg.mpc.ocp.integrator.sampling_period /
                         (cfg.mpc.ocp.integrator.substeps_per_sample *
                          cfg.mpc.plant_substep_multiplier);
  const double ratio = kJerkSamplePeriod / h_plant;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 || ratio < 1.0 - 1e-6) {
    diags.push_back("integrator: plant substep " + std::to_string(h_plant) +
                    " s does not divide the " + std::to_string(kJerkSamplePeriod) +
                    " s jerk output grid");
  }

  if (!cfg.road_from_file) {
    const double T = cfg.mpc.ocp.integrator.sampling_period;
    const double need_begin = -cfg.mpc.delay.delta;
    const double need_end = std::max(cfg.mpc.run_length * T,
                                     (cfg.mpc.run_length - 1 + cfg.mpc.ocp.horizon) * T);
    if (cfg.mpc.run_length > 0 && (cfg.synthetic.start_time > need_begin ||
                                   cfg.synthetic.end_time < need_end)) {
      diags.push_back("road: synthetic window [" + std::to_string(cfg.synthetic.start_time) +
                      ", " + std::to_string(cfg.synthetic.end_time) +
                      "] does not cover the run, which needs [" +
                      std::to_string(need_begin) + ", " + std::to_string(need_end) + "]");
    }
  }
  return diags;
}

}  // namespace halfcar
