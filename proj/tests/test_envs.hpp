#pragma once

#include <cmath>
#include <memory>

#include "lsp/envs/environment.hpp"

namespace lsp::testing {

// Multiplies every reward channel of the wrapped environment by `factor`.
class ScaledRewardEnv final : public Environment {
public:
  ScaledRewardEnv(std::unique_ptr<Environment> inner, double factor)
      : inner_(std::move(inner)), factor_(factor) {}
  ScaledRewardEnv(const ScaledRewardEnv& o) : inner_(o.inner_->clone()), factor_(o.factor_) {}

  const EnvSpec& spec() const override { return inner_->spec(); }
  Vec reset(Rng& rng) override { return inner_->reset(rng); }
  StepResult step(std::span<const double> action) override {
    StepResult r = inner_->step(action);
    for (auto& [_, v] : r.rewards) v *= factor_;
    return r;
  }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<ScaledRewardEnv>(*this);
  }
  std::string name() const override { return "scaled(" + inner_->name() + ")"; }

private:
  std::unique_ptr<Environment> inner_;
  double factor_;
};

// Random-walk chain with a constant reward; observation is the position and
// the step counter. After `blowup_after` steps the reward jumps to 1e300,
// which overflows the squared losses.
class ConstantRewardEnv final : public Environment {
public:
  explicit ConstantRewardEnv(double reward = 0.0, std::size_t horizon = 20,
                             std::size_t action_dim = 2, std::size_t blowup_after = 0)
      : reward_(reward), blowup_after_(blowup_after) {
    spec_.observation_dim = 2;
    spec_.action_dim = action_dim;
    spec_.max_episode_steps = horizon;
    spec_.reward_channels = {"task"};
    spec_.action_low.assign(action_dim, -INFINITY);
    spec_.action_high.assign(action_dim, INFINITY);
  }

  const EnvSpec& spec() const override { return spec_; }
  Vec reset(Rng& rng) override {
    x_ = rng.uniform(-1.0, 1.0);
    t_ = 0;
    return {x_, 0.0};
  }
  StepResult step(std::span<const double> action) override {
    const Vec a = clip_action(action);
    x_ = std::tanh(x_ + 0.1 * a[0]);
    ++t_;
    ++total_;
    StepResult r;
    r.rewards["task"] = blowup_after_ && total_ > blowup_after_ ? 1e300 : reward_;
    r.observation = {x_, static_cast<double>(t_) / static_cast<double>(spec_.max_episode_steps)};
    return r;
  }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<ConstantRewardEnv>(*this);
  }
  std::string name() const override { return "constant_reward"; }

private:
  EnvSpec spec_;
  double reward_;
  std::size_t blowup_after_;
  double x_ = 0.0;
  std::size_t t_ = 0;
  std::size_t total_ = 0;
};

}  // namespace lsp::testing
