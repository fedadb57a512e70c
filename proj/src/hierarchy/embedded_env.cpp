#include "lsp/hierarchy/embedded_env.hpp"

#include <limits>

namespace lsp {

EmbeddedEnvironment::EmbeddedEnvironment(std::unique_ptr<Environment> inner,
                                         std::shared_ptr<const FlowPolicy> frozen,
                                         std::size_t latent_hold)
    : inner_(std::move(inner)), frozen_(std::move(frozen)), hold_(latent_hold) {
  if (!inner_ || !frozen_) throw std::invalid_argument("embed: null environment or policy");
  if (hold_ == 0) throw std::invalid_argument("embed: latent_hold must be >= 1");
  const EnvSpec& in = inner_->spec();
  if (frozen_->obs_dim() != in.observation_dim || frozen_->action_dim() != in.action_dim)
    throw ShapeError("embed: policy dims (" + std::to_string(frozen_->obs_dim()) + ", " +
                     std::to_string(frozen_->action_dim()) + ") do not match " + inner_->name() +
                     " (" + std::to_string(in.observation_dim) + ", " +
                     std::to_string(in.action_dim) + ")");
  spec_ = in;
  spec_.max_episode_steps = (in.max_episode_steps + hold_ - 1) / hold_;
  const double inf = std::numeric_limits<double>::infinity();
  spec_.action_low.assign(in.action_dim, -inf);
  spec_.action_high.assign(in.action_dim, inf);
}

EmbeddedEnvironment::EmbeddedEnvironment(const EmbeddedEnvironment& other)
    : inner_(other.inner_->clone()),
      frozen_(other.frozen_),
      hold_(other.hold_),
      spec_(other.spec_),
      obs_(other.obs_),
      own_inner_steps_(other.own_inner_steps_) {}

Vec EmbeddedEnvironment::reset(Rng& rng) {
  obs_ = inner_->reset(rng);
  return obs_;
}

StepResult EmbeddedEnvironment::step(std::span<const double> latent) {
  const Vec h = clip_action(latent);
  StepResult out;
  for (std::size_t k = 0; k < hold_; ++k) {
    const Mapped a = frozen_->forward(h, obs_);
    StepResult r = inner_->step(a.value);
    ++own_inner_steps_;
    for (const auto& [channel, value] : r.rewards) out.rewards[channel] += value;
    obs_ = r.observation;
    out.terminal = r.terminal;
    if (r.terminal) break;
  }
  out.observation = obs_;
  return out;
}

std::unique_ptr<Environment> EmbeddedEnvironment::clone() const {
  return std::make_unique<EmbeddedEnvironment>(*this);
}

std::string EmbeddedEnvironment::name() const { return "embedded(" + inner_->name() + ")"; }

std::size_t EmbeddedEnvironment::base_steps() const {
  if (auto* e = dynamic_cast<const EmbeddedEnvironment*>(inner_.get())) return e->base_steps();
  return own_inner_steps_;
}

std::unique_ptr<EmbeddedEnvironment> embed_layer(std::unique_ptr<Environment> env,
                                                 std::shared_ptr<const FlowPolicy> trained,
                                                 std::size_t latent_hold) {
  return std::make_unique<EmbeddedEnvironment>(std::move(env), std::move(trained), latent_hold);
}

}  // namespace lsp
