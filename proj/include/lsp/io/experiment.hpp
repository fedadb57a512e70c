#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lsp/hierarchy/layer_stack.hpp"
#include "lsp/io/config.hpp"

namespace lsp {

/// Process exit codes of the command line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitDivergence = 2, kExitIo = 3 };

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kMetricsHeader =
    "epoch,total_env_steps,mean_return,std_return,q_loss,v_loss,policy_loss,entropy_estimate,"
    "wall_clock_seconds";

/// One CSV row with round-trip precision; wall clock is written as 0 unless asked for.
std::string metrics_row(const EpochMetrics& m, bool with_wall_clock);

/// `<utc timestamp>_<first 8 hex digits of the config hash>`.
std::string run_directory_name(const ExperimentConfig& cfg);

struct RunResult {
  std::string directory;
  LayerStack stack;
  std::vector<std::vector<EpochMetrics>> metrics;
};

/// Trains every layer of `cfg` on top of `initial`, writing into `dir`:
/// config.json, metrics_layer<i>.csv for each new layer, metrics.csv for the
/// last one, layer_<i>.json checkpoints and stack.json. A failure leaves the
/// files written so far plus error.json, then rethrows.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& dir,
                         LayerStack initial = {}, std::ostream* log = nullptr);

struct EvaluationReport {
  EvalStats stats;
  std::size_t n_rollouts = 0;
  std::uint64_t seed = 0;
};

/// Loads a checkpoint (stack.json or a single layer) and rolls it out on `env`.
/// Dimension mismatches raise ShapeError.
EvaluationReport evaluate_checkpoint(const std::string& checkpoint, const EnvConfig& env,
                                     std::size_t n_rollouts, std::uint64_t seed,
                                     bool record_trajectories);

/// rollout,step,s0..,a0..,reward rows for every recorded step.
void write_trajectory_dump(const std::string& path, const EvalStats& stats);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick self-test of the flow and tabular machinery against the reference
/// computations. Prints one line per check.
std::vector<CheckResult> run_oracle_checks(std::uint64_t seed, std::ostream& out);

}  // namespace lsp
