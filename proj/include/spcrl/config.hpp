#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcrl/point_mass.hpp"
#include "spcrl/ppo.hpp"
#include "spcrl/spdl.hpp"

namespace spcrl {

// Everything a single run needs. Defaults are per environment (see
// env_defaults); a config file and CLI flags override individual keys.
struct ExperimentConfig {
  std::string env = "pointmass2d";
  std::string curriculum = "default";
  std::uint64_t seed = 0;
  int iterations = 200;
  int n_step = 2048;       // transitions collected per iteration
  int eval_episodes = 20;  // target-distribution evaluation episodes
  int hidden = 21;         // width of both hidden layers
  double pm_dt = pm::kDt;
  double pm_force_limit = pm::kForceLimit;
  PpoConfig ppo;
  CurriculumConfig curriculum_cfg;
  Eigen::VectorXd init_mean;
  Eigen::VectorXd init_std;
  Eigen::VectorXd target_mean;
  Eigen::VectorXd target_std;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': not a number: " + value);
  }
  if (used != value.size())
    throw std::invalid_argument("config key '" + key + "': trailing junk in: " + value);
  return out;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': not an integer: " + value);
  }
  if (used != value.size())
    throw std::invalid_argument("config key '" + key + "': trailing junk in: " + value);
  return out;
}

inline Eigen::VectorXd parse_vector(const std::string& key, const std::string& value) {
  std::vector<double> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw std::invalid_argument("config key '" + key + "': empty element in: " + value);
    parts.push_back(parse_double(key, item));
  }
  if (parts.empty())
    throw std::invalid_argument("config key '" + key + "': empty vector");
  return Eigen::Map<const Eigen::VectorXd>(parts.data(),
                                           static_cast<Eigen::Index>(parts.size()));
}

}  // namespace detail

// key=value lines; '#' starts a comment line; blank lines ignored.
// Duplicate keys are rejected: a silently shadowed hyperparameter is exactly
// the reproducibility hazard this format exists to avoid.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value, got: " + t);
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": duplicate key: " + key);
  }
  return kv;
}

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline Eigen::Index context_dim_of(const std::string& env) {
  if (env == "pointmass2d") return 2;
  if (env == "pointmass3d") return 3;
  if (env == "gridchain") return 1;
  throw std::invalid_argument("unknown env: " + env);
}

// Per-environment hyperparameters; point-mass values follow the reference
// setup this implementation targets, gridchain values are this repo's own.
inline ExperimentConfig env_defaults(const std::string& env) {
  ExperimentConfig cfg;
  cfg.env = env;
  if (env == "pointmass3d") {
    cfg.curriculum_cfg.sigma_lb = (Eigen::VectorXd(3) << 0.2, 0.1875, 0.1).finished();
    cfg.init_mean = (Eigen::VectorXd(3) << 0.0, 4.25, 2.0).finished();
    cfg.init_std = (Eigen::VectorXd(3) << 2.0, 1.875, 1.0).finished();
    cfg.target_mean = (Eigen::VectorXd(3) << 2.5, 0.5, 0.0).finished();
    cfg.target_std = (Eigen::VectorXd(3) << 4e-3, 3.75e-3, 2e-3).finished();
  } else if (env == "pointmass2d") {
    cfg.curriculum_cfg.sigma_lb = (Eigen::VectorXd(2) << 0.2, 0.1875).finished();
    cfg.init_mean = (Eigen::VectorXd(2) << 0.0, 4.25).finished();
    cfg.init_std = (Eigen::VectorXd(2) << 2.0, 1.875).finished();
    cfg.target_mean = (Eigen::VectorXd(2) << 2.5, 0.5).finished();
    cfg.target_std = (Eigen::VectorXd(2) << 4e-3, 3.75e-3).finished();
  } else if (env == "gridchain") {
    cfg.n_step = 1024;
    cfg.curriculum_cfg.sigma_lb = (Eigen::VectorXd(1) << 0.2).finished();
    cfg.init_mean = (Eigen::VectorXd(1) << 1.0).finished();
    cfg.init_std = (Eigen::VectorXd(1) << 2.0).finished();
    cfg.target_mean = (Eigen::VectorXd(1) << 9.0).finished();
    cfg.target_std = (Eigen::VectorXd(1) << 0.05).finished();
  } else {
    throw std::invalid_argument("unknown env: " + env);
  }
  return cfg;
}

// Applies one key. Unknown keys throw; callers decide which keys may appear.
inline void apply_override(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_vector;
  if (key == "env") {
    cfg.env = value;
  } else if (key == "curriculum") {
    cfg.curriculum = value;
  } else if (key == "seed") {
    const long long v = parse_int(key, value);
    if (v < 0) throw std::invalid_argument("config key 'seed': must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (key == "iterations") {
    cfg.iterations = static_cast<int>(parse_int(key, value));
  } else if (key == "n_step") {
    cfg.n_step = static_cast<int>(parse_int(key, value));
  } else if (key == "eval_episodes") {
    cfg.eval_episodes = static_cast<int>(parse_int(key, value));
  } else if (key == "hidden") {
    cfg.hidden = static_cast<int>(parse_int(key, value));
  } else if (key == "pm_dt") {
    cfg.pm_dt = parse_double(key, value);
  } else if (key == "pm_force_limit") {
    cfg.pm_force_limit = parse_double(key, value);
  } else if (key == "gamma") {
    cfg.ppo.gamma = parse_double(key, value);
  } else if (key == "lam") {
    cfg.ppo.lam = parse_double(key, value);
  } else if (key == "clip") {
    cfg.ppo.clip = parse_double(key, value);
  } else if (key == "epochs") {
    cfg.ppo.epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "minibatches") {
    cfg.ppo.minibatches = static_cast<int>(parse_int(key, value));
  } else if (key == "lr") {
    cfg.ppo.lr = parse_double(key, value);
  } else if (key == "zeta") {
    cfg.curriculum_cfg.zeta = parse_double(key, value);
  } else if (key == "n_alpha") {
    cfg.curriculum_cfg.n_alpha = static_cast<int>(parse_int(key, value));
  } else if (key == "n_offset") {
    cfg.curriculum_cfg.n_offset = static_cast<int>(parse_int(key, value));
  } else if (key == "trust_region") {
    cfg.curriculum_cfg.trust_region = parse_double(key, value);
  } else if (key == "sigma_lb") {
    cfg.curriculum_cfg.sigma_lb = parse_vector(key, value);
  } else if (key == "d_kl_lb") {
    cfg.curriculum_cfg.d_kl_lb = parse_double(key, value);
  } else if (key == "eta") {
    cfg.curriculum_cfg.eta = parse_double(key, value);
  } else if (key == "init_mean") {
    cfg.init_mean = parse_vector(key, value);
  } else if (key == "init_std") {
    cfg.init_std = parse_vector(key, value);
  } else if (key == "target_mean") {
    cfg.target_mean = parse_vector(key, value);
  } else if (key == "target_std") {
    cfg.target_std = parse_vector(key, value);
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

inline void validate_config(const ExperimentConfig& cfg) {
  const Eigen::Index d = context_dim_of(cfg.env);  // throws on unknown env
  if (cfg.curriculum != "spdl" && cfg.curriculum != "sprl" &&
      cfg.curriculum != "random" && cfg.curriculum != "default")
    throw std::invalid_argument("unknown curriculum: " + cfg.curriculum);
  if (cfg.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (cfg.n_step < 1) throw std::invalid_argument("n_step must be >= 1");
  if (cfg.eval_episodes < 2) throw std::invalid_argument("eval_episodes must be >= 2");
  if (cfg.hidden < 1) throw std::invalid_argument("hidden must be >= 1");
  if (cfg.pm_dt <= 0.0) throw std::invalid_argument("pm_dt must be > 0");
  if (cfg.pm_force_limit <= 0.0) throw std::invalid_argument("pm_force_limit must be > 0");
  if (cfg.ppo.gamma < 0.0 || cfg.ppo.gamma >= 1.0)
    throw std::invalid_argument("gamma must be in [0, 1)");
  if (cfg.ppo.lam < 0.0 || cfg.ppo.lam > 1.0)
    throw std::invalid_argument("lam must be in [0, 1]");
  if (cfg.ppo.clip <= 0.0) throw std::invalid_argument("clip must be > 0");
  if (cfg.ppo.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.ppo.minibatches < 1) throw std::invalid_argument("minibatches must be >= 1");
  if (cfg.ppo.lr <= 0.0) throw std::invalid_argument("lr must be > 0");
  if (cfg.curriculum_cfg.zeta < 0.0) throw std::invalid_argument("zeta must be >= 0");
  if (cfg.curriculum_cfg.n_alpha < 0) throw std::invalid_argument("n_alpha must be >= 0");
  if (cfg.curriculum_cfg.n_offset < 0) throw std::invalid_argument("n_offset must be >= 0");
  if (cfg.curriculum_cfg.trust_region <= 0.0)
    throw std::invalid_argument("trust_region must be > 0");
  if (cfg.curriculum_cfg.d_kl_lb <= 0.0) throw std::invalid_argument("d_kl_lb must be > 0");
  if (cfg.curriculum_cfg.eta <= 0.0) throw std::invalid_argument("eta must be > 0");
  const auto check_vec = [d](const Eigen::VectorXd& v, const char* name, bool positive) {
    if (v.size() != d)
      throw std::invalid_argument(std::string(name) + " must have one entry per context dim");
    if (positive && (v.array() <= 0.0).any())
      throw std::invalid_argument(std::string(name) + " entries must be > 0");
    if (!v.allFinite())
      throw std::invalid_argument(std::string(name) + " entries must be finite");
  };
  check_vec(cfg.curriculum_cfg.sigma_lb, "sigma_lb", true);
  check_vec(cfg.init_mean, "init_mean", false);
  check_vec(cfg.init_std, "init_std", true);
  check_vec(cfg.target_mean, "target_mean", false);
  check_vec(cfg.target_std, "target_std", true);
}

// Layering: env (CLI beats file) picks the defaults, file keys overwrite them,
// CLI keys overwrite the file. The env key itself passes through both maps and
// lands back on the resolved value.
inline ExperimentConfig build_config(const std::map<std::string, std::string>& file_kv,
                                     const std::map<std::string, std::string>& cli_kv) {
  std::string env;
  if (auto it = cli_kv.find("env"); it != cli_kv.end()) {
    env = it->second;
  } else if (auto jt = file_kv.find("env"); jt != file_kv.end()) {
    env = jt->second;
  } else {
    throw std::invalid_argument("env not specified (use --env or an env= config line)");
  }
  ExperimentConfig cfg = env_defaults(env);
  for (const auto& [k, v] : file_kv) apply_override(cfg, k, v);
  for (const auto& [k, v] : cli_kv) apply_override(cfg, k, v);
  validate_config(cfg);
  return cfg;
}

}  // namespace spcrl
