// Command line front end: train, stack, evaluate, oracle-check.

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "lsp/io/checkpoint.hpp"
#include "lsp/io/config.hpp"
#include "lsp/io/experiment.hpp"

namespace fs = std::filesystem;
using namespace lsp;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> layers;
};

ExperimentConfig prepare(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed || c.layers) {
    nlohmann::json doc = cfg.source;
    if (c.seed) doc["seed"] = *c.seed;
    if (c.layers) {
      auto& layers = doc.at("layers");
      if (*c.layers == 0 || *c.layers > layers.size())
        throw ConfigError("--layers " + std::to_string(*c.layers) + " outside 1.." +
                          std::to_string(layers.size()));
      layers.erase(layers.begin() + static_cast<std::ptrdiff_t>(*c.layers), layers.end());
    }
    cfg = parse_config(doc);
  }
  return cfg;
}

std::string run_dir(const ExperimentConfig& cfg, const std::string& out) {
  const std::string root = out.empty() ? cfg.output_dir : out;
  return (fs::path(root) / run_directory_name(cfg)).string();
}

int report(const std::exception& e) {
  std::cerr << "error: " << e.what() << '\n';
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DivergenceError*>(&e)) return kExitDivergence;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const CheckpointError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e))
    return kExitIo;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitConfig;
  return kExitIo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent space policies for hierarchical maximum-entropy RL"};
  app.require_subcommand(1);

  Common train_opts;
  auto* train = app.add_subcommand("train", "Train every layer listed in a config");
  train->add_option("--config", train_opts.config, "Experiment config (JSON)")->required();
  train->add_option("--seed", train_opts.seed, "Override the config seed");
  train->add_option("--out", train_opts.out, "Parent directory of the run directory");
  train->add_option("--layers", train_opts.layers, "Train only the first N layers");

  Common stack_opts;
  std::string from;
  auto* stack = app.add_subcommand("stack", "Add layers on top of a trained stack");
  stack->add_option("--config", stack_opts.config, "Config describing the new layers")->required();
  stack->add_option("--from", from, "stack.json or layer checkpoint to build on")->required();
  stack->add_option("--seed", stack_opts.seed, "Override the config seed");
  stack->add_option("--out", stack_opts.out, "Parent directory of the run directory");
  stack->add_option("--layers", stack_opts.layers, "Use only the first N layers of the config");

  std::string checkpoint, eval_config, dump;
  std::size_t rollouts = 10;
  std::uint64_t eval_seed = 0;
  auto* evaluate = app.add_subcommand("evaluate", "Roll out a saved policy");
  evaluate->add_option("--checkpoint", checkpoint, "stack.json or layer checkpoint")->required();
  evaluate->add_option("--config", eval_config, "Config naming the environment")->required();
  evaluate->add_option("--rollouts", rollouts, "Number of rollouts")->capture_default_str();
  evaluate->add_option("--seed", eval_seed, "Rollout seed")->capture_default_str();
  evaluate->add_option("--dump", dump, "Write per-step trajectories to this CSV");

  std::uint64_t oracle_seed = 0;
  auto* oracle_check = app.add_subcommand("oracle-check", "Check flows and tabular solvers");
  oracle_check->add_option("--seed", oracle_seed, "Seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const ExperimentConfig cfg = prepare(train_opts);
      const auto dir = run_dir(cfg, train_opts.out);
      std::cout << "run directory " << dir << std::endl;
      run_experiment(cfg, dir, {}, &std::cout);
    } else if (*stack) {
      const ExperimentConfig cfg = prepare(stack_opts);
      LayerStack base = load_stack(from);
      const auto dir = run_dir(cfg, stack_opts.out);
      std::cout << "run directory " << dir << std::endl;
      run_experiment(cfg, dir, std::move(base), &std::cout);
    } else if (*evaluate) {
      const ExperimentConfig cfg = load_config(eval_config);
      const auto rep = evaluate_checkpoint(checkpoint, cfg.env, rollouts, eval_seed, !dump.empty());
      for (std::size_t i = 0; i < rep.stats.rollouts.size(); ++i)
        std::cout << "rollout " << i << " return " << rep.stats.rollouts[i].total_return
                  << " length " << rep.stats.rollouts[i].length
                  << (rep.stats.rollouts[i].terminal ? " terminal" : "") << '\n';
      std::cout << "mean " << rep.stats.mean_return << " std " << rep.stats.std_return
                << " success_rate " << rep.stats.success_rate << '\n';
      if (!dump.empty()) write_trajectory_dump(dump, rep.stats);
    } else if (*oracle_check) {
      const auto results = run_oracle_checks(oracle_seed, std::cout);
      for (const auto& r : results)
        if (!r.passed) return 1;
    }
  } catch (const std::exception& e) {
    return report(e);
  }
  return kExitOk;
}
