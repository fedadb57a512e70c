#include "lsp/envs/bandit.hpp"

#include <limits>

namespace lsp {

QuadraticBandit::QuadraticBandit(double k, Vec target) : k_(k), target_(std::move(target)) {
  if (target_.empty()) throw EnvError("quadratic bandit needs a non-empty target");
  const double inf = std::numeric_limits<double>::infinity();
  spec_.observation_dim = 1;
  spec_.action_dim = target_.size();
  spec_.max_episode_steps = 1;
  spec_.reward_channels = {"task"};
  spec_.action_low.assign(target_.size(), -inf);
  spec_.action_high.assign(target_.size(), inf);
}

Vec QuadraticBandit::reset(Rng&) { return {1.0}; }

StepResult QuadraticBandit::step(std::span<const double> action) {
  const Vec a = clip_action(action);
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - target_[i]) * (a[i] - target_[i]);
  StepResult r;
  r.observation = {1.0};
  r.rewards["task"] = -k_ * sq;
  r.terminal = true;
  return r;
}

std::unique_ptr<Environment> QuadraticBandit::clone() const {
  return std::make_unique<QuadraticBandit>(*this);
}

}  // namespace lsp
