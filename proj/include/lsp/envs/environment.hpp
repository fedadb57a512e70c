#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsp/core/rng.hpp"

namespace lsp {

using Vec = std::vector<double>;
/// Named reward channels, e.g. "velocity_norm" or "sparse_goal".
using RewardMap = std::map<std::string, double>;

struct EnvSpec {
  std::size_t observation_dim = 0;
  std::size_t action_dim = 0;
  std::size_t max_episode_steps = 1000;
  std::vector<std::string> reward_channels;
  /// Per-dimension clip range applied to actions before the dynamics.
  Vec action_low;
  Vec action_high;

  bool has_channel(const std::string& name) const;
};

struct StepResult {
  Vec observation;
  RewardMap rewards;
  bool terminal = false;
};

class EnvError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Episodic continuous-control environment with several reward channels.
class Environment {
public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual Vec reset(Rng& rng) = 0;
  virtual StepResult step(std::span<const double> action) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
  virtual std::string name() const = 0;

  /// The same task with obstacles removed, for pretraining lower layers.
  virtual std::unique_ptr<Environment> pretraining_variant() const {
    throw EnvError(name() + " has no pretraining variant");
  }

protected:
  /// Validates the action size and clips it to the spec bounds.
  Vec clip_action(std::span<const double> action) const;
};

}  // namespace lsp
