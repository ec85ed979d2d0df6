#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "semsplit/config.hpp"
#include "semsplit/csvio.hpp"
#include "semsplit/env.hpp"
#include "semsplit/ppo.hpp"

namespace semsplit {

/// Environment assembly per comparison scheme. The SDMA baselines (O/T)
/// carry their single payload on per-user private beams with no common
/// stream; SegS swaps the one-hot map codec for plain binary labels.
inline SchemeFlags scheme_variant(Scheme s) {
  switch (s) {
    case Scheme::kSsMgsc: return SchemeFlags{true, true, true, false};
    case Scheme::kSegsMgsc: return SchemeFlags{true, true, true, true};
    case Scheme::kOMgsc: return SchemeFlags{false, true, false, false};
    case Scheme::kTMgsc: return SchemeFlags{false, false, true, false};
  }
  throw std::invalid_argument("scheme_variant: unknown scheme");
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace ckptdetail {

inline void write_mlp(std::ostream& out, const MlpParams& p, const std::string& name) {
  out << name << ' ' << p.layers.size() << ' ' << p.log_std.size() << '\n';
  for (const auto& layer : p.layers) {
    out << "layer " << layer.rows << ' ' << layer.cols << ' '
        << (layer.activation == Activation::kTanh ? "tanh" : "linear") << '\n';
    for (double w : layer.weights) out << w << ' ';
    out << '\n';
    for (double b : layer.bias) out << b << ' ';
    out << '\n';
  }
  if (!p.log_std.empty()) {
    for (double v : p.log_std) out << v << ' ';
    out << '\n';
  }
}

inline MlpParams read_mlp(std::istream& in, const std::string& expected_name) {
  std::string name;
  std::size_t n_layers = 0, n_log_std = 0;
  in >> name >> n_layers >> n_log_std;
  if (!in || name != expected_name)
    throw std::runtime_error("checkpoint: expected section '" + expected_name + "'");
  MlpParams p;
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::string tag, act;
    MlpParams::Layer layer;
    in >> tag >> layer.rows >> layer.cols >> act;
    if (!in || tag != "layer") throw std::runtime_error("checkpoint: malformed layer header");
    layer.activation = act == "tanh" ? Activation::kTanh : Activation::kLinear;
    layer.weights.resize(static_cast<std::size_t>(layer.rows) * layer.cols);
    for (auto& w : layer.weights) in >> w;
    layer.bias.resize(static_cast<std::size_t>(layer.rows));
    for (auto& b : layer.bias) in >> b;
    p.layers.push_back(std::move(layer));
  }
  p.log_std.resize(n_log_std);
  for (auto& v : p.log_std) in >> v;
  if (!in) throw std::runtime_error("checkpoint: truncated parameter data");
  p.validate();
  return p;
}

}  // namespace ckptdetail

inline void save_checkpoint(const std::string& path, const MlpParams& actor,
                            const MlpParams& critic) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << "semsplit-checkpoint v1\n";
  out << std::setprecision(17);
  ckptdetail::write_mlp(out, actor, "actor");
  ckptdetail::write_mlp(out, critic, "critic");
}

struct Checkpoint {
  MlpParams actor;
  MlpParams critic;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "semsplit-checkpoint" || version != "v1")
    throw std::runtime_error("load_checkpoint: unrecognized format in " + path);
  Checkpoint c;
  c.actor = ckptdetail::read_mlp(in, "actor");
  c.critic = ckptdetail::read_mlp(in, "critic");
  return c;
}

// ---------------------------------------------------------------------------
// Policy evaluation (exploration disabled)
// ---------------------------------------------------------------------------

struct EvalResult {
  int steps = 0;
  double reward_mean = 0.0;
  double ses_total_mean = 0.0;
  double ses_total_std = 0.0;
  std::vector<double> ses_user_mean;
  std::vector<double> ber_common_model_mean;   // per user
  std::vector<double> ber_private_model_mean;  // per user
  double measured_map_ber = 0.0;   // flipped / sent over the whole rollout
  double measured_text_ber = 0.0;
  double power_mean = 0.0;
  double power_violation_rate = 0.0;
  double ses_violation_rate = 0.0;
};

inline std::uint64_t eval_seed(std::uint64_t train_seed) {
  return train_seed ^ 0x9E3779B97F4A7C15ull;
}

/// Rolls the mean (noise-free) policy action over fresh environment steps.
inline EvalResult evaluate_policy(const MlpParams& actor, const EnvConfig& env_cfg,
                                  SchemeFlags scheme, std::uint64_t seed, int steps) {
  if (steps < 1) throw std::invalid_argument("evaluate_policy: steps must be >= 1");
  Environment env(env_cfg, scheme, seed);
  if (actor.input_dim() != env.state_dim() || actor.output_dim() != env.action_dim())
    throw std::invalid_argument("evaluate_policy: actor dimensions do not match environment");
  const int k_users = env_cfg.n_users;
  EvalResult res;
  res.steps = steps;
  res.ses_user_mean.assign(static_cast<std::size_t>(k_users), 0.0);
  res.ber_common_model_mean.assign(static_cast<std::size_t>(k_users), 0.0);
  res.ber_private_model_mean.assign(static_cast<std::size_t>(k_users), 0.0);
  long long map_sent = 0, map_flipped = 0, text_sent = 0, text_flipped = 0;
  double ses_sq = 0.0;
  StateVector state = env.reset();
  for (int t = 0; t < steps; ++t) {
    const ActionVector action = policy_mean_action(actor, state);
    StepOutcome out = env.step(action);
    res.reward_mean += out.reward;
    double ses_total = 0.0;
    for (int k = 0; k < k_users; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      ses_total += out.per_user_ses[ku].total;
      res.ses_user_mean[ku] += out.per_user_ses[ku].total;
      res.ber_common_model_mean[ku] += out.ber_common[ku];
      res.ber_private_model_mean[ku] += out.ber_private[ku];
    }
    res.ses_total_mean += ses_total;
    ses_sq += ses_total * ses_total;
    res.power_mean += out.power_used;
    if (out.power_slack < 0.0) res.power_violation_rate += 1.0;
    for (double slack : out.ses_slacks)
      if (slack < 0.0) {
        res.ses_violation_rate += 1.0;
        break;
      }
    map_sent += out.map_bits_sent;
    map_flipped += out.map_bits_flipped;
    text_sent += out.text_bits_sent;
    text_flipped += out.text_bits_flipped;
    state = out.next_state;
  }
  const double inv = 1.0 / steps;
  res.reward_mean *= inv;
  res.ses_total_mean *= inv;
  ses_sq *= inv;
  res.ses_total_std = std::sqrt(std::max(0.0, ses_sq - res.ses_total_mean * res.ses_total_mean));
  for (auto& v : res.ses_user_mean) v *= inv;
  for (auto& v : res.ber_common_model_mean) v *= inv;
  for (auto& v : res.ber_private_model_mean) v *= inv;
  res.power_mean *= inv;
  res.power_violation_rate *= inv;
  res.ses_violation_rate *= inv;
  res.measured_map_ber = map_sent > 0 ? static_cast<double>(map_flipped) / map_sent : 0.0;
  res.measured_text_ber = text_sent > 0 ? static_cast<double>(text_flipped) / text_sent : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Grid runner
// ---------------------------------------------------------------------------

struct CellResult {
  Scheme scheme;
  double p_max_dbm = 0.0;
  double lr_actor = 0.0;
  std::uint64_t seed = 0;
  TrainResult train;
  EvalResult eval;
};

/// Trains one (scheme, power, lr, seed) cell and evaluates the final policy
/// on fresh steps. Channel draws depend only on the seed, so cells sharing a
/// seed see identical channel sequences across schemes and powers.
inline CellResult run_cell(const ExperimentConfig& cfg, Scheme scheme, double p_max_dbm,
                           double lr_actor, std::uint64_t seed) {
  EnvConfig env_cfg = cfg.env;
  env_cfg.p_max_watts = dbm_to_watts(p_max_dbm);
  PpoConfig ppo_cfg = cfg.ppo;
  ppo_cfg.lr_actor = lr_actor;
  ppo_cfg.seed = seed;
  Environment env(env_cfg, scheme_variant(scheme), seed);
  CellResult cell{scheme, p_max_dbm, lr_actor, seed, train(env, ppo_cfg), {}};
  cell.eval = evaluate_policy(cell.train.actor, env_cfg, scheme_variant(scheme), eval_seed(seed),
                              cfg.eval_steps);
  return cell;
}

namespace expdetail {

inline std::vector<std::string> metrics_header(int k_users) {
  std::vector<std::string> h{"scheme", "p_max_dbm", "lr_actor", "seed", "episode", "reward",
                             "ses_total"};
  for (int k = 0; k < k_users; ++k) h.push_back("ses_user_" + std::to_string(k));
  h.push_back("ber_common");
  for (int k = 0; k < k_users; ++k) h.push_back("ber_private_user_" + std::to_string(k));
  return h;
}

inline void write_metric_rows(CsvWriter& w, const CellResult& cell, int k_users) {
  for (const EpisodeStats& ep : cell.train.episodes) {
    std::vector<std::string> row;
    row.push_back(scheme_name(cell.scheme));
    row.push_back(csv_number(cell.p_max_dbm));
    row.push_back(csv_number(cell.lr_actor));
    row.push_back(std::to_string(cell.seed));
    row.push_back(std::to_string(ep.episode));
    row.push_back(csv_number(ep.mean_reward));
    double ses_total = 0.0;
    for (double s : ep.mean_ses) ses_total += s;
    row.push_back(csv_number(ses_total));
    for (int k = 0; k < k_users; ++k) row.push_back(csv_number(ep.mean_ses[static_cast<std::size_t>(k)]));
    double ber_common = 0.0;
    for (double b : ep.mean_ber_common) ber_common += b;
    row.push_back(csv_number(ber_common / k_users));
    for (int k = 0; k < k_users; ++k)
      row.push_back(csv_number(ep.mean_ber_private[static_cast<std::size_t>(k)]));
    w.write_row(row);
  }
}

inline std::vector<std::string> summary_header(int k_users) {
  std::vector<std::string> h{"scheme", "p_max_dbm",      "lr_actor",
                             "seed",   "eval_steps",     "reward_mean",
                             "ses_total_mean", "ses_total_std"};
  for (int k = 0; k < k_users; ++k) h.push_back("ses_user_" + std::to_string(k) + "_mean");
  h.insert(h.end(), {"ber_common_model_mean", "ber_private_model_mean", "measured_map_ber",
                     "measured_text_ber", "power_mean_w", "power_violation_rate",
                     "ses_violation_rate", "train_first_decile_reward",
                     "train_last_decile_reward"});
  return h;
}

inline double decile_mean(const std::vector<EpisodeStats>& eps, bool last) {
  if (eps.empty()) return 0.0;
  const std::size_t n = eps.size();
  std::size_t m = std::max<std::size_t>(1, n / 10);
  double acc = 0.0;
  if (last)
    for (std::size_t i = n - m; i < n; ++i) acc += eps[i].mean_reward;
  else
    for (std::size_t i = 0; i < m; ++i) acc += eps[i].mean_reward;
  return acc / static_cast<double>(m);
}

inline void write_summary_row(CsvWriter& w, const CellResult& cell, int k_users) {
  const EvalResult& e = cell.eval;
  std::vector<std::string> row;
  row.push_back(scheme_name(cell.scheme));
  row.push_back(csv_number(cell.p_max_dbm));
  row.push_back(csv_number(cell.lr_actor));
  row.push_back(std::to_string(cell.seed));
  row.push_back(std::to_string(e.steps));
  row.push_back(csv_number(e.reward_mean));
  row.push_back(csv_number(e.ses_total_mean));
  row.push_back(csv_number(e.ses_total_std));
  for (int k = 0; k < k_users; ++k)
    row.push_back(csv_number(e.ses_user_mean[static_cast<std::size_t>(k)]));
  double bc = 0.0, bp = 0.0;
  for (double b : e.ber_common_model_mean) bc += b;
  for (double b : e.ber_private_model_mean) bp += b;
  row.push_back(csv_number(bc / k_users));
  row.push_back(csv_number(bp / k_users));
  row.push_back(csv_number(e.measured_map_ber));
  row.push_back(csv_number(e.measured_text_ber));
  row.push_back(csv_number(e.power_mean));
  row.push_back(csv_number(e.power_violation_rate));
  row.push_back(csv_number(e.ses_violation_rate));
  row.push_back(csv_number(decile_mean(cell.train.episodes, false)));
  row.push_back(csv_number(decile_mean(cell.train.episodes, true)));
  w.write_row(row);
}

inline std::string checkpoint_name(const CellResult& cell) {
  std::ostringstream name;
  name << scheme_name(cell.scheme) << "_p" << cell.p_max_dbm << "dBm_lr" << cell.lr_actor
       << "_seed" << cell.seed << ".ckpt";
  return name.str();
}

}  // namespace expdetail

/// Runs the full (power x lr x seed) grid for the configured scheme (or for
/// an explicit scheme list), writing metrics.csv, summary.csv, and one
/// checkpoint per cell under out_dir. Output is a pure function of the
/// config: reruns produce byte-identical files.
inline std::vector<CellResult> run_grid(const ExperimentConfig& cfg,
                                        const std::vector<Scheme>& schemes,
                                        const std::string& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "checkpoints");
  const int k_users = cfg.env.n_users;
  CsvWriter metrics((fs::path(out_dir) / "metrics.csv").string());
  CsvWriter summary((fs::path(out_dir) / "summary.csv").string());
  metrics.write_row(expdetail::metrics_header(k_users));
  summary.write_row(expdetail::summary_header(k_users));
  std::vector<CellResult> cells;
  for (Scheme scheme : schemes) {
    for (double p_dbm : cfg.power_grid_dbm) {
      for (double lr : cfg.learning_rate_grid) {
        for (std::uint64_t seed : cfg.seeds) {
          CellResult cell = run_cell(cfg, scheme, p_dbm, lr, seed);
          expdetail::write_metric_rows(metrics, cell, k_users);
          expdetail::write_summary_row(summary, cell, k_users);
          metrics.flush();
          summary.flush();
          save_checkpoint(
              (fs::path(out_dir) / "checkpoints" / expdetail::checkpoint_name(cell)).string(),
              cell.train.actor, cell.train.critic);
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

inline std::vector<CellResult> run_experiment(const ExperimentConfig& cfg,
                                              const std::string& out_dir) {
  return run_grid(cfg, {cfg.scheme}, out_dir);
}

inline std::vector<CellResult> compare_schemes(const ExperimentConfig& cfg,
                                               const std::string& out_dir) {
  return run_grid(cfg, {Scheme::kSsMgsc, Scheme::kSegsMgsc, Scheme::kOMgsc, Scheme::kTMgsc},
                  out_dir);
}

// ---------------------------------------------------------------------------
// SES-vs-BER sweep
// ---------------------------------------------------------------------------

struct BerSweepPoint {
  double ber = 0.0;
  std::vector<double> ses_user_mean;
  double ses_total_mean = 0.0;
};

/// Fixed budgets, injected BER. Transport noise is paired across grid points
/// (same seed and step sequence), so per-user SES is exactly monotone
/// nonincreasing in the injected BER.
inline std::vector<BerSweepPoint> sweep_ber_vs_ses(const ExperimentConfig& cfg,
                                                   std::uint64_t seed) {
  cfg.validate();
  const BerSweepConfig& sweep = cfg.ber_sweep;
  const int k_users = cfg.env.n_users;
  const int n_c = sweep.n_c_units < 0 ? cfg.env.map.m_max : sweep.n_c_units;
  const int n_p = sweep.n_p_units < 0 ? cfg.env.text.n_max : sweep.n_p_units;
  if (n_c > cfg.env.map.m_max || n_p > cfg.env.text.n_max)
    throw ConfigError("ber_sweep budget exceeds configured ceilings");

  // Budget raws chosen so quantization recovers the requested units exactly.
  ActionVector action(static_cast<std::size_t>(action_length(k_users, cfg.env.n_tx_antennas)), 0.0);
  const std::size_t budget_base = action.size() - 1 - static_cast<std::size_t>(k_users);
  action[budget_base] = 2.0 * n_c / cfg.env.map.m_max - 1.0;
  for (int k = 0; k < k_users; ++k)
    action[budget_base + 1 + static_cast<std::size_t>(k)] = 2.0 * n_p / cfg.env.text.n_max - 1.0;

  std::vector<BerSweepPoint> points;
  for (double ber : sweep.grid) {
    Environment env(cfg.env, scheme_variant(cfg.scheme), seed);
    const std::optional<double> map_ber =
        (sweep.target == "image" || sweep.target == "both") ? std::optional<double>(ber)
                                                            : std::optional<double>(0.0);
    const std::optional<double> text_ber =
        (sweep.target == "text" || sweep.target == "both") ? std::optional<double>(ber)
                                                           : std::optional<double>(0.0);
    env.inject_ber(map_ber, text_ber);
    BerSweepPoint pt;
    pt.ber = ber;
    pt.ses_user_mean.assign(static_cast<std::size_t>(k_users), 0.0);
    for (int t = 0; t < sweep.steps; ++t) {
      StepOutcome out = env.step(action);
      for (int k = 0; k < k_users; ++k)
        pt.ses_user_mean[static_cast<std::size_t>(k)] +=
            out.per_user_ses[static_cast<std::size_t>(k)].total;
    }
    for (auto& v : pt.ses_user_mean) {
      v /= sweep.steps;
      pt.ses_total_mean += v;
    }
    points.push_back(std::move(pt));
  }
  return points;
}

inline void write_ber_sweep_csv(const std::vector<BerSweepPoint>& points, int k_users,
                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  CsvWriter w((fs::path(out_dir) / "ber_sweep.csv").string());
  std::vector<std::string> header{"ber", "ses_total_mean"};
  for (int k = 0; k < k_users; ++k) header.push_back("ses_user_" + std::to_string(k));
  w.write_row(header);
  for (const auto& pt : points) {
    std::vector<std::string> row{csv_number(pt.ber), csv_number(pt.ses_total_mean)};
    for (double v : pt.ses_user_mean) row.push_back(csv_number(v));
    w.write_row(row);
  }
}

}  // namespace semsplit
