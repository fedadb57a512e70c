#include "lsp/hierarchy/layer_stack.hpp"

#include <algorithm>

namespace lsp {

void LayerStack::validate() const {
  if (layers.empty()) throw ShapeError("layer stack is empty");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].policy) throw ShapeError("layer " + std::to_string(i) + " has no policy");
    if (i == 0) continue;
    const auto& below = *layers[i - 1].policy;
    const auto& above = *layers[i].policy;
    if (above.action_dim() != below.action_dim() || above.obs_dim() != below.obs_dim())
      throw ShapeError("layer " + std::to_string(i) + " (obs " + std::to_string(above.obs_dim()) +
                       ", action " + std::to_string(above.action_dim()) +
                       ") does not match the latent space of layer " + std::to_string(i - 1) +
                       " (obs " + std::to_string(below.obs_dim()) + ", latent " +
                       std::to_string(below.action_dim()) + ")");
  }
}

ComposedPolicy::ComposedPolicy(std::vector<std::shared_ptr<const FlowPolicy>> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("compose: no layers");
  for (std::size_t i = 1; i < layers_.size(); ++i)
    if (layers_[i]->action_dim() != layers_[0]->action_dim() ||
        layers_[i]->obs_dim() != layers_[0]->obs_dim())
      throw ShapeError("compose: layer " + std::to_string(i) + " dims are inconsistent");
}

std::vector<Mapped> ComposedPolicy::forward_trace(std::span<const double> latent,
                                                  std::span<const double> obs) const {
  std::vector<Mapped> trace;
  Vec x(latent.begin(), latent.end());
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    trace.push_back((*it)->forward(x, obs));
    x = trace.back().value;
  }
  return trace;
}

Mapped ComposedPolicy::forward(std::span<const double> latent, std::span<const double> obs) const {
  Mapped out{Vec(latent.begin(), latent.end()), 0.0};
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    Mapped m = (*it)->forward(out.value, obs);
    out.value = std::move(m.value);
    out.log_det += m.log_det;
  }
  return out;
}

Mapped ComposedPolicy::inverse(std::span<const double> action, std::span<const double> obs) const {
  Mapped out{Vec(action.begin(), action.end()), 0.0};
  for (const auto& layer : layers_) {
    Mapped m = layer->inverse(out.value, obs);
    out.value = std::move(m.value);
    out.log_det += m.log_det;
  }
  return out;
}

ComposedPolicy compose(const LayerStack& stack) {
  stack.validate();
  std::vector<std::shared_ptr<const FlowPolicy>> layers;
  for (const auto& l : stack.layers) layers.push_back(l.policy);
  return ComposedPolicy(std::move(layers));
}

std::unique_ptr<Environment> environment_for_layer(const Environment& base,
                                                   const LayerStack& stack, std::size_t count,
                                                   std::size_t top_action_repeat,
                                                   bool pretraining_env) {
  if (count > stack.layers.size())
    throw std::invalid_argument("environment_for_layer: only " +
                                std::to_string(stack.layers.size()) + " layers available");
  if (count == 0 && top_action_repeat != 1)
    throw std::invalid_argument("action_repeat must be 1 for the bottom layer");
  std::unique_ptr<Environment> env = pretraining_env ? base.pretraining_variant() : base.clone();
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t hold = j + 1 < count ? stack.layers[j + 1].action_repeat : top_action_repeat;
    env = embed_layer(std::move(env), stack.layers[j].policy, hold);
  }
  return env;
}

LayerwiseResult train_layerwise(const Environment& base, const std::vector<LayerSpec>& specs,
                                LayerStack initial, const EpochCallback& on_epoch) {
  LayerwiseResult result;
  result.stack = std::move(initial);
  for (const LayerSpec& spec : specs) {
    const std::size_t index = result.stack.layers.size();
    const std::string where = "layer " + std::to_string(index) + ": ";
    try {
      auto env = environment_for_layer(base, result.stack, index, spec.action_repeat,
                                       spec.pretraining_env);
      TrainerConfig cfg = spec.trainer;
      if (index >= 1) cfg.action_prior = ActionPrior::gaussian;
      FlowConfig fc = spec.flow;
      fc.obs_dim = env->spec().observation_dim;
      fc.action_dim = env->spec().action_dim;
      Rng init_rng(cfg.seed ^ 0xF1A7F1A7F1A7F1A7ULL);
      FlowPolicy policy(fc, init_rng);
      MaxEntTrainer trainer(*env, policy, cfg);
      auto rows = trainer.train([&](const EpochMetrics& m) {
        if (on_epoch) on_epoch(index, m);
      });
      result.metrics.push_back(std::move(rows));
      StackLayer layer;
      layer.policy = std::make_shared<const FlowPolicy>(std::move(policy));
      layer.reward = cfg.reward_channel;
      layer.prior = cfg.action_prior;
      layer.latent_mode = cfg.latent_mode;
      layer.latent_hold = cfg.latent_hold;
      layer.action_repeat = spec.action_repeat;
      layer.pretraining_env = spec.pretraining_env;
      result.stack.layers.push_back(std::move(layer));
    } catch (const DivergenceError& e) {
      throw DivergenceError(where + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(where + e.what());
    }
  }
  return result;
}

EvalStats evaluate_stack(const Environment& base, const LayerStack& stack, std::size_t n_rollouts,
                         std::uint64_t seed, std::size_t max_steps, bool record_trajectories) {
  stack.validate();
  const StackLayer& top = stack.layers.back();
  auto env = environment_for_layer(base, stack, stack.size() - 1, top.action_repeat,
                                   top.pretraining_env);
  RolloutOptions opts;
  opts.n_rollouts = n_rollouts;
  opts.seed = seed;
  opts.max_steps = std::min(max_steps, env->spec().max_episode_steps);
  opts.reward_channel = top.reward;
  opts.latent_mode = top.latent_mode;
  opts.latent_hold = top.latent_hold;
  opts.record_trajectories = record_trajectories;
  return evaluate_policy(*env, *top.policy, opts);
}

}  // namespace lsp
