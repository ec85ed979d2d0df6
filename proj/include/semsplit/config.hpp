#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "semsplit/env.hpp"
#include "semsplit/ppo.hpp"
#include "semsplit/units.hpp"

namespace semsplit {

/// Any malformed configuration maps to exit code 2 at the CLI boundary.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheme { kSsMgsc, kSegsMgsc, kOMgsc, kTMgsc };

inline Scheme parse_scheme(const std::string& name) {
  if (name == "SS-MGSC") return Scheme::kSsMgsc;
  if (name == "SegS-MGSC") return Scheme::kSegsMgsc;
  if (name == "O-MGSC") return Scheme::kOMgsc;
  if (name == "T-MGSC") return Scheme::kTMgsc;
  throw ConfigError("unknown scheme '" + name +
                    "' (expected SS-MGSC, SegS-MGSC, O-MGSC, or T-MGSC)");
}

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kSsMgsc: return "SS-MGSC";
    case Scheme::kSegsMgsc: return "SegS-MGSC";
    case Scheme::kOMgsc: return "O-MGSC";
    case Scheme::kTMgsc: return "T-MGSC";
  }
  return "?";
}

struct BerSweepConfig {
  std::vector<double> grid{0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  std::string target = "image";  // image | text | both
  int steps = 200;
  int n_c_units = -1;  // -1 = full budget
  int n_p_units = -1;

  void validate() const {
    if (grid.empty()) throw ConfigError("ber_sweep.grid must be non-empty");
    for (double b : grid)
      if (!(b >= 0.0) || !(b <= 0.5)) throw ConfigError("ber_sweep.grid values must lie in [0, 0.5]");
    if (target != "image" && target != "text" && target != "both")
      throw ConfigError("ber_sweep.target must be image, text, or both");
    if (steps < 1) throw ConfigError("ber_sweep.steps must be >= 1");
  }
};

struct ExperimentConfig {
  int schema_version = 1;
  Scheme scheme = Scheme::kSsMgsc;
  std::vector<std::uint64_t> seeds;
  std::vector<double> power_grid_dbm;
  std::vector<double> learning_rate_grid;
  int eval_steps = 200;
  EnvConfig env;
  PpoConfig ppo;
  BerSweepConfig ber_sweep;

  void validate() const {
    if (schema_version != 1) throw ConfigError("unsupported schema_version");
    if (seeds.empty()) throw ConfigError("seeds must be non-empty");
    if (power_grid_dbm.empty()) throw ConfigError("power_grid_dbm must be non-empty");
    if (learning_rate_grid.empty()) throw ConfigError("learning_rate_grid must be non-empty");
    for (double lr : learning_rate_grid)
      if (!(lr > 0.0)) throw ConfigError("learning rates must be positive");
    if (eval_steps < 1) throw ConfigError("eval_steps must be >= 1");
    try {
      env.validate();
      ppo.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    ber_sweep.validate();
  }
};

namespace cfgdetail {

using nlohmann::json;

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& context) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* k) { return it.key() == k; });
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + context);
  }
}

template <typename T>
T get_req(const json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + context);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + context);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& context) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + context);
  }
}

inline PathLossParams parse_channel(const json& j) {
  check_keys(j, {"epsilon0_db", "d0_m", "alpha", "bandwidth_hz", "noise_psd_dbm_hz"}, "env.channel");
  try {
    return PathLossParams(db_to_linear(get_or(j, "epsilon0_db", -30.0, "env.channel")),
                          get_or(j, "d0_m", 1.0, "env.channel"),
                          get_or(j, "alpha", 3.4, "env.channel"),
                          get_or(j, "bandwidth_hz", 1e7, "env.channel"),
                          get_or(j, "noise_psd_dbm_hz", -174.0, "env.channel"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline MapConfig parse_map(const json& j) {
  check_keys(j, {"grid_h", "grid_w", "n_classes", "m_max", "n_blobs", "min_blob_frac",
                 "max_blob_frac"},
             "env.map");
  MapConfig m;
  m.grid_h = get_or(j, "grid_h", m.grid_h, "env.map");
  m.grid_w = get_or(j, "grid_w", m.grid_w, "env.map");
  m.n_classes = get_or(j, "n_classes", m.n_classes, "env.map");
  m.m_max = get_or(j, "m_max", m.m_max, "env.map");
  m.gen.n_blobs = get_or(j, "n_blobs", m.gen.n_blobs, "env.map");
  m.gen.min_blob_frac = get_or(j, "min_blob_frac", m.gen.min_blob_frac, "env.map");
  m.gen.max_blob_frac = get_or(j, "max_blob_frac", m.gen.max_blob_frac, "env.map");
  return m;
}

inline SurrogateParams parse_surrogate(const json& j) {
  check_keys(j, {"w_img", "w_txt", "clip_floor", "lpips_max", "lpips_min", "decay_b"},
             "env.surrogate");
  SurrogateParams p;
  p.w_img = get_or(j, "w_img", p.w_img, "env.surrogate");
  p.w_txt = get_or(j, "w_txt", p.w_txt, "env.surrogate");
  p.clip_floor = get_or(j, "clip_floor", p.clip_floor, "env.surrogate");
  p.lpips_max = get_or(j, "lpips_max", p.lpips_max, "env.surrogate");
  p.lpips_min = get_or(j, "lpips_min", p.lpips_min, "env.surrogate");
  p.decay_b = get_or(j, "decay_b", p.decay_b, "env.surrogate");
  return p;
}

inline TextConfig parse_text(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"prompts", "n_max", "dictionary", "spell_correction"}, "env.text");
  TextConfig t;
  t.prompts = get_req<std::vector<std::string>>(j, "prompts", "env.text");
  t.n_max = get_or(j, "n_max", t.n_max, "env.text");
  t.spell_correction = get_or(j, "spell_correction", t.spell_correction, "env.text");
  if (j.contains("dictionary")) {
    const auto rel = get_req<std::string>(j, "dictionary", "env.text");
    const std::filesystem::path p = std::filesystem::path(rel).is_absolute()
                                        ? std::filesystem::path(rel)
                                        : base_dir / rel;
    try {
      t.dictionary = load_dictionary(p.string());
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  }
  return t;
}

inline EnvConfig parse_env(const json& j, const std::filesystem::path& base_dir,
                           double default_norm_ref_dbm) {
  check_keys(j,
             {"n_t", "p_max_dbm", "p_max_norm_ref_dbm", "ses_thresholds", "alpha_penalty",
              "beta_penalty", "steps_per_episode", "distances_m", "channel", "map", "text",
              "surrogate"},
             "env");
  EnvConfig env;
  env.distances_m = get_req<std::vector<double>>(j, "distances_m", "env");
  env.n_users = static_cast<int>(env.distances_m.size());
  env.n_tx_antennas = get_or(j, "n_t", 8, "env");
  env.p_max_watts = dbm_to_watts(get_or(j, "p_max_dbm", 30.0, "env"));
  env.p_max_norm_ref_watts =
      dbm_to_watts(get_or(j, "p_max_norm_ref_dbm", default_norm_ref_dbm, "env"));
  env.ses_thresholds = get_or(j, "ses_thresholds", std::vector<double>(env.distances_m.size(), 1.0), "env");
  env.alpha_penalty = get_or(j, "alpha_penalty", env.alpha_penalty, "env");
  env.beta_penalty = get_or(j, "beta_penalty", env.beta_penalty, "env");
  env.steps_per_episode = get_or(j, "steps_per_episode", env.steps_per_episode, "env");
  if (j.contains("channel")) env.path_loss = parse_channel(j.at("channel"));
  if (j.contains("map")) env.map = parse_map(j.at("map"));
  if (j.contains("text")) env.text = parse_text(j.at("text"), base_dir);
  else throw ConfigError("missing key 'text' in env");
  if (j.contains("surrogate")) env.surrogate = parse_surrogate(j.at("surrogate"));
  return env;
}

inline PpoConfig parse_ppo(const json& j) {
  check_keys(j,
             {"gamma", "lam", "clip_eps", "lr_actor", "lr_critic", "minibatch_size",
              "buffer_capacity", "epochs_per_update", "max_episodes", "grad_clip_actor",
              "grad_clip_critic", "hidden", "advantage_norm", "log_std_init"},
             "ppo");
  PpoConfig p;
  p.gamma = get_or(j, "gamma", p.gamma, "ppo");
  p.lam = get_or(j, "lam", p.lam, "ppo");
  p.clip_eps = get_or(j, "clip_eps", p.clip_eps, "ppo");
  p.lr_actor = get_or(j, "lr_actor", p.lr_actor, "ppo");
  p.lr_critic = get_or(j, "lr_critic", p.lr_critic, "ppo");
  p.minibatch_size = get_or(j, "minibatch_size", p.minibatch_size, "ppo");
  p.buffer_capacity = get_or(j, "buffer_capacity", p.buffer_capacity, "ppo");
  p.epochs_per_update = get_or(j, "epochs_per_update", p.epochs_per_update, "ppo");
  p.max_episodes = get_or(j, "max_episodes", p.max_episodes, "ppo");
  p.grad_clip_actor = get_or(j, "grad_clip_actor", p.grad_clip_actor, "ppo");
  p.grad_clip_critic = get_or(j, "grad_clip_critic", p.grad_clip_critic, "ppo");
  p.hidden = get_or(j, "hidden", p.hidden, "ppo");
  p.advantage_norm = get_or(j, "advantage_norm", p.advantage_norm, "ppo");
  p.log_std_init = get_or(j, "log_std_init", p.log_std_init, "ppo");
  return p;
}

inline BerSweepConfig parse_ber_sweep(const json& j) {
  check_keys(j, {"grid", "target", "steps", "n_c_units", "n_p_units"}, "ber_sweep");
  BerSweepConfig b;
  b.grid = get_or(j, "grid", b.grid, "ber_sweep");
  b.target = get_or(j, "target", b.target, "ber_sweep");
  b.steps = get_or(j, "steps", b.steps, "ber_sweep");
  b.n_c_units = get_or(j, "n_c_units", b.n_c_units, "ber_sweep");
  b.n_p_units = get_or(j, "n_p_units", b.n_p_units, "ber_sweep");
  return b;
}

}  // namespace cfgdetail

inline ExperimentConfig parse_config(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir) {
  using namespace cfgdetail;
  if (!j.is_object()) throw ConfigError("config root must be an object");
  check_keys(j,
             {"schema_version", "rng", "scheme", "seeds", "power_grid_dbm", "learning_rate_grid",
              "eval_steps", "env", "ppo", "ber_sweep"},
             "config root");
  ExperimentConfig cfg;
  cfg.schema_version = get_req<int>(j, "schema_version", "config root");
  if (cfg.schema_version != 1) throw ConfigError("unsupported schema_version");
  if (j.contains("rng")) {
    check_keys(j.at("rng"), {"algorithm"}, "rng");
    const auto algo = get_or<std::string>(j.at("rng"), "algorithm",
                                          std::string(kRngAlgorithmId), "rng");
    if (algo != kRngAlgorithmId)
      throw ConfigError("unsupported rng.algorithm '" + algo + "' (expected " +
                        std::string(kRngAlgorithmId) + ")");
  }
  cfg.scheme = parse_scheme(get_req<std::string>(j, "scheme", "config root"));
  cfg.seeds = get_req<std::vector<std::uint64_t>>(j, "seeds", "config root");
  cfg.power_grid_dbm = get_or(j, "power_grid_dbm", std::vector<double>{30.0}, "config root");
  cfg.learning_rate_grid = get_or(j, "learning_rate_grid", std::vector<double>{1e-3}, "config root");
  cfg.eval_steps = get_or(j, "eval_steps", cfg.eval_steps, "config root");
  if (!j.contains("env")) throw ConfigError("missing key 'env' in config root");
  double norm_ref_dbm = 30.0;
  if (!cfg.power_grid_dbm.empty())
    norm_ref_dbm = *std::max_element(cfg.power_grid_dbm.begin(), cfg.power_grid_dbm.end());
  cfg.env = cfgdetail::parse_env(j.at("env"), base_dir, norm_ref_dbm);
  if (j.contains("ppo")) cfg.ppo = cfgdetail::parse_ppo(j.at("ppo"));
  if (j.contains("ber_sweep")) cfg.ber_sweep = cfgdetail::parse_ber_sweep(j.at("ber_sweep"));
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

}  // namespace semsplit
