// Flat "key = value" experiment configuration files.
#pragma once

#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sogp/experiment.hpp"

namespace sogp {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin])))
    ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1])))
    --end;
  return s.substr(begin, end - begin);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for '" + key + "': " + value);
  }
  if (trim(value.substr(pos)) != "")
    throw std::invalid_argument("config: trailing junk for '" + key + "': " + value);
  return v;
}

inline std::int64_t parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  const auto i = static_cast<std::int64_t>(v);
  if (static_cast<double>(i) != v)
    throw std::invalid_argument("config: expected integer for '" + key + "'");
  return i;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config: expected bool for '" + key + "'");
}

// comma- or whitespace-separated list of numbers
inline std::vector<double> parse_list(const std::string& key,
                                      const std::string& value) {
  std::string normalized = value;
  for (char& c : normalized)
    if (c == ',') c = ' ';
  std::istringstream is(normalized);
  std::vector<double> out;
  double v;
  while (is >> v) out.push_back(v);
  std::string rest;
  if (is >> rest)
    throw std::invalid_argument("config: bad list for '" + key + "': " + value);
  if (out.empty())
    throw std::invalid_argument("config: empty list for '" + key + "'");
  return out;
}

inline Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out(static_cast<Index>(i)) = v[i];
  return out;
}

}  // namespace detail

/// Parses "key = value" lines; '#' starts a comment, blank lines are
/// skipped. Later keys override earlier ones.
inline std::map<std::string, std::string> parse_flat_config(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  ": empty key");
    out[key] = value;
  }
  return out;
}

/// Applies one key to the config; throws on unknown keys or bad values.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_list;
  using detail::to_vector;

  if (key == "scheme") {
    cfg.scheme = parse_scheme(value);
  } else if (key == "h") {
    cfg.h = parse_int(key, value);
  } else if (key == "bv_capacity") {
    cfg.bv_capacity = static_cast<Index>(parse_int(key, value));
  } else if (key == "eps_tol") {
    cfg.eps_tol = parse_double(key, value);
  } else if (key == "signed_deletion_score") {
    cfg.signed_deletion_score = parse_bool(key, value);
  } else if (key == "sigma_s2") {
    cfg.sigma_s2 = parse_double(key, value);
  } else if (key == "sigma_n2") {
    cfg.sigma_n2 = parse_double(key, value);
  } else if (key == "lengthscales") {
    cfg.lengthscales = to_vector(parse_list(key, value));
  } else if (key == "kp") {
    cfg.kp = to_vector(parse_list(key, value));
  } else if (key == "kd") {
    cfg.kd = to_vector(parse_list(key, value));
  } else if (key == "ramp_duration") {
    cfg.ramp_duration = parse_double(key, value);
  } else if (key == "warmup_duration") {
    cfg.warmup_duration = parse_double(key, value);
  } else if (key == "update_stride") {
    cfg.update_stride = static_cast<int>(parse_int(key, value));
  } else if (key == "arm_m1") {
    cfg.arm_m1 = parse_double(key, value);
  } else if (key == "arm_m2") {
    cfg.arm_m2 = parse_double(key, value);
  } else if (key == "arm_l1") {
    cfg.arm_l1 = parse_double(key, value);
  } else if (key == "arm_l2") {
    cfg.arm_l2 = parse_double(key, value);
  } else if (key == "gravity") {
    cfg.gravity = parse_double(key, value);
  } else if (key == "arm_friction") {
    const auto v = parse_list(key, value);
    if (v.size() != 2)
      throw std::invalid_argument("config: arm_friction needs 2 values");
    cfg.arm_friction << v[0], v[1];
  } else if (key == "noise_var") {
    cfg.noise_var = parse_double(key, value);
  } else if (key == "estimator") {
    if (value == "exact") cfg.estimator_mode = EstimatorMode::exact;
    else if (value == "fd") cfg.estimator_mode = EstimatorMode::finite_difference;
    else if (value == "eso") cfg.estimator_mode = EstimatorMode::linear_eso;
    else throw std::invalid_argument("config: estimator must be exact|fd|eso");
  } else if (key == "estimator_bandwidth") {
    cfg.estimator_bandwidth = parse_double(key, value);
  } else if (key == "fd_cutoff_hz") {
    cfg.fd_cutoff_hz = parse_double(key, value);
  } else if (key == "waypoints") {
    const auto v = parse_list(key, value);
    if (v.size() % 2 != 0 || v.size() < 4)
      throw std::invalid_argument(
          "config: waypoints must hold an even number (>= 4) of values");
    cfg.schedule.waypoints.resize(static_cast<Index>(v.size() / 2), 2);
    for (std::size_t i = 0; i < v.size() / 2; ++i) {
      cfg.schedule.waypoints(static_cast<Index>(i), 0) = v[2 * i];
      cfg.schedule.waypoints(static_cast<Index>(i), 1) = v[2 * i + 1];
    }
  } else if (key == "segment_duration") {
    cfg.schedule.segment_duration = parse_double(key, value);
  } else if (key == "t_switch") {
    cfg.schedule.t_switch = parse_double(key, value);
  } else if (key == "circle_center") {
    const auto v = parse_list(key, value);
    if (v.size() != 2)
      throw std::invalid_argument("config: circle_center needs 2 values");
    cfg.schedule.circle_center << v[0], v[1];
  } else if (key == "circle_radius") {
    cfg.schedule.circle_radius = parse_double(key, value);
  } else if (key == "circle_omega") {
    cfg.schedule.circle_omega = parse_double(key, value);
  } else if (key == "bridge_duration") {
    cfg.schedule.bridge_duration = parse_double(key, value);
  } else if (key == "total_duration") {
    cfg.schedule.total_duration = parse_double(key, value);
  } else if (key == "dt") {
    cfg.dt = parse_double(key, value);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "out") {
    cfg.out_prefix = value;
  } else if (key == "save_models") {
    cfg.save_models_prefix = value;
  } else if (key == "load_models") {
    cfg.load_models_prefix = value;
  } else if (key == "trace_decimation") {
    cfg.trace_decimation = static_cast<int>(parse_int(key, value));
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

inline ExperimentConfig config_from_map(
    const std::map<std::string, std::string>& entries) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : entries) apply_config_key(cfg, key, value);
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is)
    throw std::runtime_error("config: cannot open '" + path + "'");
  return config_from_map(parse_flat_config(is));
}

}  // namespace sogp
