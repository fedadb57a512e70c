#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsp/core/adam.hpp"
#include "lsp/core/nn.hpp"
#include "lsp/envs/environment.hpp"
#include "lsp/flow/flow_policy.hpp"
#include "lsp/hierarchy/latent_schedule.hpp"
#include "lsp/rl/replay_pool.hpp"

namespace lsp {

/// Action prior of the KL-regularised objective. `uniform` reduces it to the
/// plain entropy bonus; `gaussian` is the unit Gaussian used by upper layers.
enum class ActionPrior { uniform, gaussian };

ActionPrior parse_action_prior(const std::string& name);
std::string to_string(ActionPrior prior);

struct TrainerConfig {
  double reward_scale = 1.0;
  double discount = 0.99;
  double target_smoothing = 1e-2;
  std::size_t batch_size = 128;
  std::size_t steps_per_epoch = 1000;
  std::size_t min_pool_size = 1000;
  std::size_t max_path_length = 1000;
  std::size_t total_epochs = 10;
  std::uint64_t seed = 0;
  ActionPrior action_prior = ActionPrior::uniform;
  std::size_t pool_capacity = 1'000'000;
  double learning_rate = 3e-4;
  std::size_t hidden_units = 128;
  std::size_t eval_rollouts = 10;
  std::string reward_channel = "task";
  LatentMode latent_mode = LatentMode::per_step;
  std::size_t latent_hold = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Soft Q, V and target-V networks (two ReLU hidden layers each).
struct ValueNets {
  Mlp q;
  Mlp v;
  Mlp v_target;

  ValueNets() = default;
  ValueNets(std::size_t obs_dim, std::size_t action_dim, std::size_t hidden, Rng& rng);
};

/// target <- tau * live + (1 - tau) * target, parameter by parameter.
void target_update(Mlp& target, const Mlp& live, double tau);

struct LossReport {
  double q_loss = 0.0;
  double v_loss = 0.0;
  double policy_loss = 0.0;
  double mean_entropy_estimate = 0.0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t total_env_steps = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double q_loss = 0.0;
  double v_loss = 0.0;
  double policy_loss = 0.0;
  double entropy_estimate = 0.0;
  double wall_clock_seconds = 0.0;
  double success_rate = 0.0;
};

/// Raised when a loss becomes non-finite; `what()` carries the diagnostic dump.
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RolloutOptions {
  std::size_t n_rollouts = 10;
  std::uint64_t seed = 0;
  std::size_t max_steps = 1000;
  std::string reward_channel = "task";
  LatentMode latent_mode = LatentMode::per_step;
  std::size_t latent_hold = 1;
  bool record_trajectories = false;
};

struct TrajectoryStep {
  Vec state;
  Vec action;
  double reward = 0.0;
};

struct RolloutResult {
  double total_return = 0.0;
  std::size_t length = 0;
  bool terminal = false;
  std::vector<TrajectoryStep> trajectory;
};

struct EvalStats {
  std::vector<RolloutResult> rollouts;
  double mean_return = 0.0;
  double std_return = 0.0;
  /// Fraction of rollouts that ended in a terminal state (goal reached).
  double success_rate = 0.0;
};

/// One stochastic episode; `rng` drives the reset and the latent stream.
RolloutResult rollout(Environment& env, const LatentPolicy& policy, const RolloutOptions& opts,
                      Rng& rng);

/// Rollout i uses its own environment copy and a generator derived from
/// (seed, i). The OpenMP and serial versions return identical results.
EvalStats evaluate_policy(const Environment& env, const LatentPolicy& policy,
                          const RolloutOptions& opts);
EvalStats evaluate_policy_serial(const Environment& env, const LatentPolicy& policy,
                                 const RolloutOptions& opts);

/// Off-policy maximum-entropy actor-critic for one FlowPolicy.
class MaxEntTrainer {
public:
  MaxEntTrainer(Environment& env, FlowPolicy& policy, TrainerConfig config);

  /// One environment step with the current policy; the transition goes to the pool.
  Transition collect_step();
  /// One gradient step on Q, V and the policy. Requires a warm pool.
  LossReport update_step();
  /// Runs total_epochs epochs; `on_epoch` sees every row as it is produced.
  std::vector<EpochMetrics> train(const std::function<void(const EpochMetrics&)>& on_epoch = {});
  EvalStats evaluate(std::size_t n_rollouts, std::uint64_t seed) const;

  const ReplayPool& pool() const { return pool_; }
  ValueNets& nets() { return nets_; }
  const TrainerConfig& config() const { return config_; }
  std::size_t env_steps() const { return env_steps_; }
  std::size_t path_limit() const;

private:
  double log_action_prior(std::span<const double> a) const;

  Environment& env_;
  FlowPolicy& policy_;
  TrainerConfig config_;
  ValueNets nets_;
  ReplayPool pool_;
  AdamState q_opt_, v_opt_, policy_opt_;
  Rng collect_rng_, learn_rng_;
  LatentSchedule schedule_;
  Vec obs_;
  bool needs_reset_ = true;
  std::size_t path_length_ = 0;
  std::size_t env_steps_ = 0;
};

}  // namespace lsp
