#include "lsp/rl/replay_pool.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lsp {

ReplayPool::ReplayPool(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim)
    : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim) {
  if (capacity == 0) throw std::invalid_argument("replay pool capacity must be positive");
}

void ReplayPool::add(const Transition& t) {
  if (t.state.size() != obs_dim_ || t.next_state.size() != obs_dim_ ||
      t.action.size() != action_dim_)
    throw ShapeError("replay pool: transition dimensions do not match the pool");
  if (!std::isfinite(t.reward)) throw std::domain_error("replay pool: non-finite reward");
  // Grow lazily up to capacity so a 1e6 pool costs nothing until it fills.
  if (size_ < capacity_ && head_ == size_) {
    states_.insert(states_.end(), t.state.begin(), t.state.end());
    actions_.insert(actions_.end(), t.action.begin(), t.action.end());
    rewards_.push_back(t.reward);
    next_states_.insert(next_states_.end(), t.next_state.begin(), t.next_state.end());
    terminals_.push_back(t.terminal ? 1.0 : 0.0);
  } else {
    std::copy(t.state.begin(), t.state.end(), states_.begin() + head_ * obs_dim_);
    std::copy(t.action.begin(), t.action.end(), actions_.begin() + head_ * action_dim_);
    rewards_[head_] = t.reward;
    std::copy(t.next_state.begin(), t.next_state.end(), next_states_.begin() + head_ * obs_dim_);
    terminals_[head_] = t.terminal ? 1.0 : 0.0;
  }
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayPool::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay pool index");
  Transition t;
  t.state.assign(states_.begin() + i * obs_dim_, states_.begin() + (i + 1) * obs_dim_);
  t.action.assign(actions_.begin() + i * action_dim_, actions_.begin() + (i + 1) * action_dim_);
  t.reward = rewards_[i];
  t.next_state.assign(next_states_.begin() + i * obs_dim_, next_states_.begin() + (i + 1) * obs_dim_);
  t.terminal = terminals_[i] != 0.0;
  return t;
}

TransitionBatch ReplayPool::sample(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("replay pool: sampling from an empty pool");
  TransitionBatch b;
  b.states = Tensor(Shape{batch_size, obs_dim_});
  b.actions = Tensor(Shape{batch_size, action_dim_});
  b.rewards = Tensor(Shape{batch_size});
  b.next_states = Tensor(Shape{batch_size, obs_dim_});
  b.terminals = Tensor(Shape{batch_size});
  b.indices.resize(batch_size);
  for (std::size_t r = 0; r < batch_size; ++r) {
    const std::size_t i = rng.index(size_);
    b.indices[r] = i;
    std::copy_n(states_.begin() + i * obs_dim_, obs_dim_, b.states.data() + r * obs_dim_);
    std::copy_n(actions_.begin() + i * action_dim_, action_dim_, b.actions.data() + r * action_dim_);
    b.rewards[r] = rewards_[i];
    std::copy_n(next_states_.begin() + i * obs_dim_, obs_dim_, b.next_states.data() + r * obs_dim_);
    b.terminals[r] = terminals_[i];
  }
  return b;
}

}  // namespace lsp
