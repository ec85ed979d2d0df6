#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "semsplit/config.hpp"
#include "semsplit/experiment.hpp"

namespace {

using namespace semsplit;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::int64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  // Missing/unreadable config files surface as ConfigError -> exit code 2.
  cmd->add_option("--config", args.config_path, "Experiment config file (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seed", args.seed, "Run only this seed (overrides the config's seed list)");
}

ExperimentConfig load(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed) {
    cfg.seeds = {static_cast<std::uint64_t>(*args.seed)};
  }
  return cfg;
}

int cmd_train(const CommonArgs& args) {
  ExperimentConfig cfg = load(args);
  // Train at the configured operating point; power/lr grids belong to sweeps.
  cfg.power_grid_dbm = {watts_to_dbm(cfg.env.p_max_watts)};
  cfg.learning_rate_grid = {cfg.ppo.lr_actor};
  const auto cells = run_experiment(cfg, args.out_dir);
  for (const auto& cell : cells)
    std::cout << scheme_name(cell.scheme) << " seed " << cell.seed << ": eval SES total "
              << cell.eval.ses_total_mean << ", eval reward " << cell.eval.reward_mean << "\n";
  std::cout << "wrote " << args.out_dir << "/metrics.csv, summary.csv, checkpoints/\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& checkpoint_path) {
  ExperimentConfig cfg = load(args);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  namespace fs = std::filesystem;
  fs::create_directories(args.out_dir);
  CsvWriter summary((fs::path(args.out_dir) / "summary.csv").string());
  summary.write_row(expdetail::summary_header(cfg.env.n_users));
  for (std::uint64_t seed : cfg.seeds) {
    CellResult cell;
    cell.scheme = cfg.scheme;
    cell.p_max_dbm = watts_to_dbm(cfg.env.p_max_watts);
    cell.lr_actor = cfg.ppo.lr_actor;
    cell.seed = seed;
    cell.eval = evaluate_policy(ckpt.actor, cfg.env, scheme_variant(cfg.scheme), eval_seed(seed),
                                cfg.eval_steps);
    expdetail::write_summary_row(summary, cell, cfg.env.n_users);
    std::cout << "seed " << seed << ": SES total " << cell.eval.ses_total_mean
              << ", measured map BER " << cell.eval.measured_map_ber << ", text BER "
              << cell.eval.measured_text_ber << "\n";
  }
  std::cout << "wrote " << args.out_dir << "/summary.csv\n";
  return 0;
}

int cmd_sweep_power(const CommonArgs& args) {
  ExperimentConfig cfg = load(args);
  run_experiment(cfg, args.out_dir);
  std::cout << "wrote " << args.out_dir << "/metrics.csv, summary.csv, checkpoints/\n";
  return 0;
}

int cmd_sweep_ber(const CommonArgs& args) {
  ExperimentConfig cfg = load(args);
  const std::uint64_t seed = cfg.seeds.front();
  const auto points = sweep_ber_vs_ses(cfg, seed);
  write_ber_sweep_csv(points, cfg.env.n_users, args.out_dir);
  for (const auto& pt : points)
    std::cout << "ber " << pt.ber << ": SES total " << pt.ses_total_mean << "\n";
  std::cout << "wrote " << args.out_dir << "/ber_sweep.csv\n";
  return 0;
}

int cmd_compare_schemes(const CommonArgs& args) {
  ExperimentConfig cfg = load(args);
  compare_schemes(cfg, args.out_dir);
  std::cout << "wrote " << args.out_dir << "/metrics.csv, summary.csv, checkpoints/\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-user downlink semantic-splitting simulator and optimizer"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, sweep_power_args, sweep_ber_args, compare_args;
  std::string checkpoint_path;

  add_common(app.add_subcommand("train", "Train PPO at the configured operating point"),
             train_args);
  auto* eval_cmd =
      app.add_subcommand("evaluate", "Evaluate a saved policy on fresh environment steps");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file to evaluate")->required();
  add_common(app.add_subcommand("sweep-power", "Train/evaluate across the power grid"),
             sweep_power_args);
  add_common(app.add_subcommand("sweep-ber", "SES vs injected BER at fixed budgets"),
             sweep_ber_args);
  add_common(app.add_subcommand("compare-schemes",
                                "Run all schemes across the power grid with paired seeds"),
             compare_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("train")) return cmd_train(train_args);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(eval_args, checkpoint_path);
    if (app.got_subcommand("sweep-power")) return cmd_sweep_power(sweep_power_args);
    if (app.got_subcommand("sweep-ber")) return cmd_sweep_ber(sweep_ber_args);
    if (app.got_subcommand("compare-schemes")) return cmd_compare_schemes(compare_args);
  } catch (const semsplit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
