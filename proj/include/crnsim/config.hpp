#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crnsim/channel.hpp"
#include "crnsim/controller.hpp"
#include "crnsim/network.hpp"
#include "crnsim/types.hpp"

namespace crnsim {

enum class ControllerKind { FhAodpa, Baseline, Oracle, Deny };
enum class UpdateMode { RoundRobin, Synchronous };
enum class TraceFormat { Csv, Jsonl };

// Full experiment description. Flat key=value files and the built-in presets
// both produce one of these; validate() enforces every range constraint and
// names the offending field.
struct ScenarioConfig {
  int count_pu = 0;
  int count_su = 0;
  double area_km = 9.0;
  double link_distance_km = 0.5;
  double min_distance_km = 0.01;

  int horizon_steps = 0;
  double sample_time_s = 1.0;
  std::vector<Interval> schedule;  // empty -> single full-horizon interval

  ChannelParams channel;

  SirTargets targets;

  double alpha_w = 1e-4;
  int basis_length = 3;
  int window = 36;
  double ridge_lambda = 1e-8;
  double q_error = 1.0;
  double q_target = 0.01;
  double s_control = 1.0;
  double p_terminal = 1.0;

  bool exploration = true;
  double exploration_gain = 0.1;

  double p_max_w = 2.0;
  double p_init_min_w = 0.01;
  double p_init_max_w = 0.1;
  double noise_floor_w = 1e-13;

  UpdateMode update_mode = UpdateMode::RoundRobin;
  ControllerKind controller = ControllerKind::FhAodpa;
  double bandwidth_hz = 1e5;
  std::uint64_t seed = 1;

  double horizon_s() const { return horizon_steps * sample_time_s; }

  Mat2 q_matrix() const { return (Mat2() << q_error, 0.0, 0.0, q_target).finished(); }
  Mat2 p_terminal_matrix() const { return p_terminal * Mat2::Identity(); }

  // Fills the schedule when none was given: SU-only scenarios default to
  // Case1 (no PUs to protect), otherwise PUs are active throughout.
  void finalize() {
    if (schedule.empty() && horizon_steps > 0) {
      const ActivityCase c = count_pu == 0 ? ActivityCase::Case1 : ActivityCase::Case2;
      schedule.push_back(Interval{0.0, horizon_s(), c});
    }
  }

  void validate() const {
    auto require = [](bool ok, const char* field, const char* what) {
      if (!ok) throw ConfigError(std::string("config field '") + field + "': " + what);
    };
    require(count_pu >= 0, "count_pu", "must be non-negative");
    require(count_su >= 0, "count_su", "must be non-negative");
    require(count_pu + count_su > 0, "count_su", "network needs at least one node");
    require(area_km > 0.0, "area_km", "must be positive");
    require(link_distance_km > 0.0, "link_distance_km", "must be positive");
    require(min_distance_km > 0.0, "min_distance_km", "must be positive");
    require(horizon_steps >= 0, "horizon_steps", "must be non-negative");
    require(sample_time_s > 0.0, "sample_time_s", "must be positive");
    try {
      channel.validate();
    } catch (const std::domain_error& e) {
      throw ConfigError(std::string("config field 'channel': ") + e.what());
    }
    require(targets.su_high > 0.0, "target_sir_su_high", "must be positive");
    require(targets.pu > 0.0, "target_sir_pu", "must be positive");
    require(targets.su_low > 0.0, "target_sir_su_low", "must be positive");
    require(alpha_w >= 0.0 && alpha_w < 1.0, "alpha_w", "must lie in [0,1)");
    require(basis_length >= 1, "basis_length", "must be at least 1");
    require(window >= 1, "window", "must be at least 1");
    require(ridge_lambda >= 0.0, "ridge_lambda", "must be non-negative");
    require(q_error > 0.0, "q_error", "must be positive (Q positive definite)");
    require(q_target > 0.0, "q_target", "must be positive (Q positive definite)");
    require(s_control > 0.0, "s_control", "must be positive");
    require(p_terminal >= 0.0, "p_terminal", "must be non-negative");
    require(exploration_gain >= 0.0, "exploration_gain", "must be non-negative");
    require(p_max_w > 0.0, "p_max", "must be positive");
    require(p_init_min_w > 0.0, "p_init_min", "must be positive");
    require(p_init_max_w >= p_init_min_w, "p_init_max", "must be >= p_init_min");
    require(p_init_max_w <= p_max_w, "p_init_max", "must be <= p_max");
    require(noise_floor_w > 0.0, "noise_floor", "must be positive");
    require(bandwidth_hz > 0.0, "bandwidth_hz", "must be positive");

    if (horizon_steps > 0) {
      if (schedule.empty())
        throw ConfigError("config field 'schedule': empty with a positive horizon");
      try {
        ActivitySchedule checked(schedule);
        if (checked.start() != 0.0 || checked.end() != horizon_s())
          throw std::domain_error("does not cover [0, horizon]");
      } catch (const std::domain_error& e) {
        throw ConfigError(std::string("config field 'schedule': ") + e.what());
      }
    }
  }
};

// §4-style experiment: 8 PUs, 20 SUs over 9 km x 9 km, 2000 s horizon with
// the published deactivation windows and target SIRs.
inline ScenarioConfig paper_fig4_preset() {
  ScenarioConfig cfg;
  cfg.count_pu = 8;
  cfg.count_su = 20;
  cfg.area_km = 9.0;
  cfg.horizon_steps = 2000;
  cfg.sample_time_s = 1.0;
  cfg.schedule = {
      Interval{0.0, 500.0, ActivityCase::Case2},
      Interval{500.0, 800.0, ActivityCase::Case1},
      Interval{800.0, 1200.0, ActivityCase::Case2},
      Interval{1200.0, 1800.0, ActivityCase::Case1},
      Interval{1800.0, 2000.0, ActivityCase::Case2},
  };
  cfg.bandwidth_hz = 1e5;
  return cfg;
}

inline std::optional<ScenarioConfig> preset_by_name(const std::string& name) {
  if (name == "paper-fig4") return paper_fig4_preset();
  return std::nullopt;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& value, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' expects a number, got '" + value + "'");
  }
}

inline long long parse_int(const std::string& value, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' expects an integer, got '" + value + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& value, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' expects an unsigned integer, got '" + value + "'");
  }
}

inline bool parse_bool(const std::string& value, const std::string& key, int line) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                    "' expects on/off, got '" + value + "'");
}

// Grammar: "0:500=case2,500:800=case1,..." with times in seconds.
inline std::vector<Interval> parse_schedule(const std::string& value, int line) {
  std::vector<Interval> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    const auto eq = item.find('=');
    if (colon == std::string::npos || eq == std::string::npos || eq < colon)
      throw ConfigError("line " + std::to_string(line) +
                        ": schedule entry '" + item + "' is not start:end=case");
    Interval iv;
    iv.start_s = parse_double(trim(item.substr(0, colon)), "schedule", line);
    iv.end_s = parse_double(trim(item.substr(colon + 1, eq - colon - 1)), "schedule", line);
    const std::string c = trim(item.substr(eq + 1));
    if (c == "case1")
      iv.activity = ActivityCase::Case1;
    else if (c == "case2")
      iv.activity = ActivityCase::Case2;
    else
      throw ConfigError("line " + std::to_string(line) + ": schedule case '" + c +
                        "' must be case1 or case2");
    out.push_back(iv);
  }
  if (out.empty())
    throw ConfigError("line " + std::to_string(line) + ": schedule has no intervals");
  return out;
}

}  // namespace detail

// Parses flat key=value text. '#' starts a comment; unknown keys are
// rejected. A 'preset' key rebases the config before later keys override it.
inline ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig cfg;
  std::string line;
  int line_no = 0;
  bool schedule_given = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");

    if (key == "preset") {
      auto preset = preset_by_name(value);
      if (!preset)
        throw ConfigError("line " + std::to_string(line_no) + ": unknown preset '" + value + "'");
      const bool keep_schedule = schedule_given;
      const std::vector<Interval> given = cfg.schedule;
      cfg = *preset;
      if (keep_schedule) cfg.schedule = given;
    } else if (key == "count_pu") {
      cfg.count_pu = static_cast<int>(detail::parse_int(value, key, line_no));
    } else if (key == "count_su") {
      cfg.count_su = static_cast<int>(detail::parse_int(value, key, line_no));
    } else if (key == "area_km") {
      cfg.area_km = detail::parse_double(value, key, line_no);
    } else if (key == "link_distance_km") {
      cfg.link_distance_km = detail::parse_double(value, key, line_no);
    } else if (key == "min_distance_km") {
      cfg.min_distance_km = detail::parse_double(value, key, line_no);
    } else if (key == "horizon_steps") {
      cfg.horizon_steps = static_cast<int>(detail::parse_int(value, key, line_no));
    } else if (key == "sample_time_s") {
      cfg.sample_time_s = detail::parse_double(value, key, line_no);
    } else if (key == "schedule") {
      cfg.schedule = detail::parse_schedule(value, line_no);
      schedule_given = true;
    } else if (key == "path_loss_exponent") {
      cfg.channel.path_loss_exponent = detail::parse_double(value, key, line_no);
    } else if (key == "reference_gain") {
      cfg.channel.reference_gain = detail::parse_double(value, key, line_no);
    } else if (key == "shadowing_stddev_db") {
      cfg.channel.shadowing_stddev_db = detail::parse_double(value, key, line_no);
    } else if (key == "rayleigh_scale") {
      cfg.channel.rayleigh_scale = detail::parse_double(value, key, line_no);
    } else if (key == "channel_correlation") {
      cfg.channel.correlation = detail::parse_double(value, key, line_no);
    } else if (key == "fading") {
      cfg.channel.fading = detail::parse_bool(value, key, line_no);
    } else if (key == "target_sir_su_high") {
      cfg.targets.su_high = detail::parse_double(value, key, line_no);
    } else if (key == "target_sir_pu") {
      cfg.targets.pu = detail::parse_double(value, key, line_no);
    } else if (key == "target_sir_su_low") {
      cfg.targets.su_low = detail::parse_double(value, key, line_no);
    } else if (key == "alpha_w") {
      cfg.alpha_w = detail::parse_double(value, key, line_no);
    } else if (key == "basis_length") {
      cfg.basis_length = static_cast<int>(detail::parse_int(value, key, line_no));
    } else if (key == "window") {
      cfg.window = static_cast<int>(detail::parse_int(value, key, line_no));
    } else if (key == "ridge_lambda") {
      cfg.ridge_lambda = detail::parse_double(value, key, line_no);
    } else if (key == "q_error") {
      cfg.q_error = detail::parse_double(value, key, line_no);
    } else if (key == "q_target") {
      cfg.q_target = detail::parse_double(value, key, line_no);
    } else if (key == "s_control") {
      cfg.s_control = detail::parse_double(value, key, line_no);
    } else if (key == "p_terminal") {
      cfg.p_terminal = detail::parse_double(value, key, line_no);
    } else if (key == "exploration") {
      cfg.exploration = detail::parse_bool(value, key, line_no);
    } else if (key == "exploration_gain") {
      cfg.exploration_gain = detail::parse_double(value, key, line_no);
    } else if (key == "p_max") {
      cfg.p_max_w = detail::parse_double(value, key, line_no);
    } else if (key == "p_init_min") {
      cfg.p_init_min_w = detail::parse_double(value, key, line_no);
    } else if (key == "p_init_max") {
      cfg.p_init_max_w = detail::parse_double(value, key, line_no);
    } else if (key == "noise_floor") {
      cfg.noise_floor_w = detail::parse_double(value, key, line_no);
    } else if (key == "update_mode") {
      if (value == "round_robin")
        cfg.update_mode = UpdateMode::RoundRobin;
      else if (value == "synchronous")
        cfg.update_mode = UpdateMode::Synchronous;
      else
        throw ConfigError("line " + std::to_string(line_no) +
                          ": update_mode must be round_robin or synchronous");
    } else if (key == "controller") {
      if (value == "fhaodpa")
        cfg.controller = ControllerKind::FhAodpa;
      else if (value == "baseline")
        cfg.controller = ControllerKind::Baseline;
      else if (value == "oracle")
        cfg.controller = ControllerKind::Oracle;
      else if (value == "deny")
        cfg.controller = ControllerKind::Deny;
      else
        throw ConfigError("line " + std::to_string(line_no) +
                          ": controller must be fhaodpa, baseline, oracle or deny");
    } else if (key == "bandwidth_hz") {
      cfg.bandwidth_hz = detail::parse_double(value, key, line_no);
    } else if (key == "seed") {
      cfg.seed = detail::parse_u64(value, key, line_no);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  cfg.finalize();
  cfg.validate();
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace crnsim
