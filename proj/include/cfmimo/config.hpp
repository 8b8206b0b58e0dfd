#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cfmimo {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physical-layer and deployment parameters of one network drop.
struct NetworkConfig {
  int num_aps = 100;            // L
  int antennas_per_ap = 4;      // N
  int num_users = 20;           // K
  double area_side = 1000.0;    // meters
  double ap_grid_spacing = 100.0;
  double ap_height_delta = 10.0;     // AP/user height difference, meters
  double shadow_std_db = 4.0;        // shadow fading std
  double shadow_decorr_m = 9.0;      // shadowing decorrelation distance
  double asd_deg = 15.0;             // angular standard deviation
  double rho_max_db = 94.0;          // normalized per-AP power budget
  double pathloss_intercept_db = -30.5;
  double pathloss_exponent_coeff = 36.7;

  double rho_max_linear() const { return std::pow(10.0, rho_max_db / 10.0); }
  double asd_rad() const { return asd_deg * M_PI / 180.0; }

  void validate() const {
    if (num_aps < 1 || antennas_per_ap < 1 || num_users < 1)
      throw ConfigError("num_aps, antennas_per_ap and num_users must be >= 1");
    if (area_side <= 0 || ap_grid_spacing <= 0)
      throw ConfigError("area_side and ap_grid_spacing must be positive");
    if (shadow_std_db <= 0 || shadow_decorr_m <= 0 || asd_deg <= 0)
      throw ConfigError("shadow_std, shadow_decorrelation and asd_deg must be positive");
  }
};

/// One Monte Carlo experiment: network + clustering + scheme + run control.
struct ExperimentConfig {
  NetworkConfig net;
  int cluster_size = 10;   // |M|
  int csi_size = 5;        // |C|
  std::string scheme = "pzf-dual";
  int iterations = 2;      // dual rounds for pzf-dual
  int trials = 1000;
  std::uint64_t seed = 1;
  std::string out = "results.csv";
  double step_size = 0.05;  // alpha
  int tau_d = 190;          // downlink channel uses per coherence interval
  int quant_bits = 8;       // A, per I/Q component
  int symbol_bits = 4;      // B, per payload symbol
  int scalar_bytes = 4;     // width of one fronthaul scalar

  bool feasible() const {
    return net.antennas_per_ap * cluster_size > csi_size - 1;
  }

  void validate() const {
    net.validate();
    if (cluster_size < 1 || cluster_size > net.num_aps)
      throw ConfigError("cluster_size must be in [1, num_aps]");
    if (csi_size < 1 || csi_size > net.num_users)
      throw ConfigError("csi_size must be in [1, num_users]");
    if (!feasible())
      throw ConfigError("infeasible: need antennas_per_ap * cluster_size > csi_size - 1");
    if (scheme != "pzf-dual" && scheme != "pzf-centralized" && scheme != "pinv-epa")
      throw ConfigError("unknown scheme '" + scheme + "'");
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (step_size <= 0) throw ConfigError("step_size must be positive");
    if (tau_d < 1) throw ConfigError("tau_d must be >= 1");
  }
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for '" + key + "': " + v);
  }
}

inline long to_long(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw ConfigError("'" + key + "' must be an integer, got " + v);
  return static_cast<long>(x);
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Parses the flat key=value config format. Unknown keys are errors.
inline ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));

    using detail::to_double;
    using detail::to_long;
    if (key == "num_aps") cfg.net.num_aps = static_cast<int>(to_long(key, val));
    else if (key == "antennas_per_ap") cfg.net.antennas_per_ap = static_cast<int>(to_long(key, val));
    else if (key == "num_users") cfg.net.num_users = static_cast<int>(to_long(key, val));
    else if (key == "area_side") cfg.net.area_side = to_double(key, val);
    else if (key == "ap_grid_spacing") cfg.net.ap_grid_spacing = to_double(key, val);
    else if (key == "ap_height_delta") cfg.net.ap_height_delta = to_double(key, val);
    else if (key == "shadow_std") cfg.net.shadow_std_db = to_double(key, val);
    else if (key == "shadow_decorrelation") cfg.net.shadow_decorr_m = to_double(key, val);
    else if (key == "asd_deg") cfg.net.asd_deg = to_double(key, val);
    else if (key == "rho_max_db") cfg.net.rho_max_db = to_double(key, val);
    else if (key == "pathloss_intercept") cfg.net.pathloss_intercept_db = to_double(key, val);
    else if (key == "pathloss_exponent") cfg.net.pathloss_exponent_coeff = to_double(key, val);
    else if (key == "cluster_size") cfg.cluster_size = static_cast<int>(to_long(key, val));
    else if (key == "csi_size") cfg.csi_size = static_cast<int>(to_long(key, val));
    else if (key == "scheme") cfg.scheme = val;
    else if (key == "iterations") cfg.iterations = static_cast<int>(to_long(key, val));
    else if (key == "trials") cfg.trials = static_cast<int>(to_long(key, val));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(key, val));
    else if (key == "out") cfg.out = val;
    else if (key == "step_size") cfg.step_size = to_double(key, val);
    else if (key == "tau_d") cfg.tau_d = static_cast<int>(to_long(key, val));
    else if (key == "quant_bits") cfg.quant_bits = static_cast<int>(to_long(key, val));
    else if (key == "symbol_bits") cfg.symbol_bits = static_cast<int>(to_long(key, val));
    else if (key == "scalar_bytes") cfg.scalar_bytes = static_cast<int>(to_long(key, val));
    else throw ConfigError("unknown config key '" + key + "' (line " + std::to_string(lineno) + ")");
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  return parse_experiment_config(f);
}

}  // namespace cfmimo
