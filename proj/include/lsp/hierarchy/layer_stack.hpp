#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lsp/envs/environment.hpp"
#include "lsp/flow/flow_policy.hpp"
#include "lsp/hierarchy/embedded_env.hpp"
#include "lsp/rl/trainer.hpp"

namespace lsp {

/// How one layer is trained. The reward channel, action prior and latent
/// schedule live in `trainer`; observation/action dims of `flow` are filled
/// in from the environment.
struct LayerSpec {
  TrainerConfig trainer;
  FlowConfig flow;
  /// Inner steps per action of this layer when the layer below is embedded.
  std::size_t action_repeat = 1;
  /// Train on the environment's pretraining variant instead of the task.
  bool pretraining_env = false;
};

/// A trained, frozen layer plus the metadata needed to rebuild its setting.
struct StackLayer {
  std::shared_ptr<const FlowPolicy> policy;
  std::string reward;
  ActionPrior prior = ActionPrior::uniform;
  LatentMode latent_mode = LatentMode::per_step;
  std::size_t latent_hold = 1;
  std::size_t action_repeat = 1;
  bool pretraining_env = false;
};

/// Layers ordered bottom (index 0, acts on the physical actions) to top.
struct LayerStack {
  std::vector<StackLayer> layers;

  /// Throws ShapeError if adjacent layers disagree on dimensions.
  void validate() const;
  std::size_t size() const { return layers.size(); }
};

/// f_0 o f_1 o ... o f_{K-1}: the latent enters the top layer, the physical
/// action leaves the bottom one. log_det sums the layer log-determinants.
class ComposedPolicy final : public LatentPolicy {
public:
  explicit ComposedPolicy(std::vector<std::shared_ptr<const FlowPolicy>> layers);

  std::size_t obs_dim() const override { return layers_.front()->obs_dim(); }
  std::size_t action_dim() const override { return layers_.front()->action_dim(); }
  Mapped forward(std::span<const double> latent, std::span<const double> obs) const override;
  Mapped inverse(std::span<const double> action, std::span<const double> obs) const override;

  /// Images after each layer, bottom-most last: {f_{K-1}(h), f_{K-2}(f_{K-1}(h)), ...}.
  std::vector<Mapped> forward_trace(std::span<const double> latent,
                                    std::span<const double> obs) const;
  std::size_t depth() const { return layers_.size(); }

private:
  std::vector<std::shared_ptr<const FlowPolicy>> layers_;
};

ComposedPolicy compose(const LayerStack& stack);

/// The environment seen by a new layer on top of `stack.layers[0..count)`.
/// `top_action_repeat` is the hold used when embedding the last of them.
std::unique_ptr<Environment> environment_for_layer(const Environment& base,
                                                   const LayerStack& stack, std::size_t count,
                                                   std::size_t top_action_repeat,
                                                   bool pretraining_env);

struct LayerwiseResult {
  LayerStack stack;
  std::vector<std::vector<EpochMetrics>> metrics;  // one log per newly trained layer
};

using EpochCallback = std::function<void(std::size_t layer, const EpochMetrics&)>;

/// Trains the layers of `specs` bottom-up on top of `initial` (empty for a
/// fresh hierarchy). Each layer is trained, frozen and embedded before the
/// next starts; layers above the first use the Gaussian action prior.
LayerwiseResult train_layerwise(const Environment& base, const std::vector<LayerSpec>& specs,
                                LayerStack initial = {}, const EpochCallback& on_epoch = {});

/// Rolls out the top layer of `stack` in its embedded environment.
EvalStats evaluate_stack(const Environment& base, const LayerStack& stack, std::size_t n_rollouts,
                         std::uint64_t seed, std::size_t max_steps, bool record_trajectories);

}  // namespace lsp
