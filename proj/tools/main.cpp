// imbf: synthesize and imbalance text-classification corpora, pretrain and
// fine-tune a small classifier under vanilla / ldam / two-stage strategies,
// sweep hyperparameters, evaluate, and emit comparison tables.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imbf/pipeline.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<uint64_t> seed;
  std::optional<uint64_t> num_seeds;
  size_t jobs = 1;
};

imbf::KeyValueConfig load_config(const GlobalOptions& opts,
                                 const std::vector<std::string>& overrides) {
  imbf::KeyValueConfig cfg = opts.config_path.empty()
                                 ? imbf::KeyValueConfig()
                                 : imbf::KeyValueConfig::from_file(opts.config_path);
  for (const auto& kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw imbf::config_error(imbf::ErrorCode::BadConfig, "--set expects key=value, got " + kv);
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  // --seed/--seeds override plan.seeds with the run [seed, seed+1, ...).
  if (opts.seed || opts.num_seeds) {
    const uint64_t base = opts.seed.value_or(1);
    const uint64_t count = opts.num_seeds.value_or(1);
    std::string seeds;
    for (uint64_t i = 0; i < count; ++i) {
      if (i) seeds += ",";
      seeds += std::to_string(base + i);
    }
    cfg.set("plan.seeds", seeds);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage fine-tuning harness for class-imbalanced text classification"};
  app.require_subcommand(1);

  GlobalOptions opts;
  std::vector<std::string> overrides;
  app.add_option("--config", opts.config_path, "config file (key = value lines)");
  app.add_option("--out", opts.out_dir, "output directory");
  app.add_option("--seed", opts.seed, "base run seed (overrides plan.seeds)");
  app.add_option("--seeds", opts.num_seeds, "number of consecutive run seeds");
  app.add_option("--jobs", opts.jobs, "parallel runs for multi-seed training/sweeps");
  app.add_option("--set", overrides, "override a config key, key=value")->take_all();

  auto* gen = app.add_subcommand("gen", "generate synthetic train/test corpora");
  auto* imbalance = app.add_subcommand("imbalance", "apply an imbalance transform to a train TSV");
  auto* pretrain = app.add_subcommand("pretrain", "train the source-task model checkpoint");

  std::string strategy = "vanilla";
  auto* train = app.add_subcommand("train", "fine-tune under a strategy and evaluate");
  train->add_option("--strategy", strategy, "vanilla | ldam | two-stage");

  std::string sweep_strategy = "vanilla";
  auto* sweep = app.add_subcommand("sweep", "grid-search epochs and learning rate");
  sweep->add_option("--strategy", sweep_strategy, "strategy template for the sweep");

  std::string ckpt_path, test_path, classes_path;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a test TSV");
  eval->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  eval->add_option("--test", test_path, "test TSV file")->required();
  eval->add_option("--classes", classes_path, "class-name file from training (one per line)");

  std::vector<std::string> run_dirs;
  bool no_improvements = false;
  auto* report = app.add_subcommand("report", "emit comparison tables across run dirs");
  report->add_option("dirs", run_dirs, "run directories")->expected(-1);
  report->add_flag("--no-improvements", no_improvements, "omit improvement-over-vanilla columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are config errors
  }

  try {
    const std::filesystem::path out(opts.out_dir);
    if (gen->parsed()) {
      imbf::cmd_gen(load_config(opts, overrides), out);
    } else if (imbalance->parsed()) {
      imbf::cmd_imbalance(load_config(opts, overrides), out);
    } else if (pretrain->parsed()) {
      imbf::cmd_pretrain(load_config(opts, overrides), out);
    } else if (train->parsed()) {
      auto cfg = load_config(opts, overrides);
      if (!train->count("--strategy")) strategy = cfg.get_string("plan.strategy", "vanilla");
      imbf::cmd_train(cfg, strategy, out, opts.jobs);
    } else if (sweep->parsed()) {
      auto cfg = load_config(opts, overrides);
      if (!sweep->count("--strategy")) sweep_strategy = cfg.get_string("plan.strategy", "vanilla");
      imbf::cmd_sweep(cfg, sweep_strategy, out, opts.jobs);
    } else if (eval->parsed()) {
      imbf::cmd_eval(load_config(opts, overrides), ckpt_path, test_path,
                     classes_path.empty() ? std::nullopt
                                          : std::optional<std::filesystem::path>(classes_path),
                     out);
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      imbf::cmd_report(dirs, out, !no_improvements);
    }
  } catch (const imbf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
