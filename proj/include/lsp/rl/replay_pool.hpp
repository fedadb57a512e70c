#pragma once

#include <cstddef>
#include <vector>

#include "lsp/core/rng.hpp"
#include "lsp/core/tensor.hpp"

namespace lsp {

/// One environment step as seen by the learner. `reward` is already scaled
/// by the trainer's reward_scale.
struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

struct TransitionBatch {
  Tensor states;       // [B, obs]
  Tensor actions;      // [B, act]
  Tensor rewards;      // [B]
  Tensor next_states;  // [B, obs]
  Tensor terminals;    // [B], 1.0 when terminal
  std::vector<std::size_t> indices;
};

/// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayPool {
public:
  ReplayPool(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim);

  void add(const Transition& t);
  TransitionBatch sample(std::size_t batch_size, Rng& rng) const;
  Transition at(std::size_t i) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

private:
  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t action_dim_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::vector<double> states_, actions_, rewards_, next_states_, terminals_;
};

}  // namespace lsp
