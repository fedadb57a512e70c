#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "lsp/core/rng.hpp"

namespace lsp {

/// Finite MDP with a uniform action prior, finite horizon and strictly
/// negative rewards. Steps are indexed t = 0..horizon.
class TabularMDP {
public:
  /// `transitions[s][a][s']` rows are renormalised; rewards are shifted by a
  /// constant when needed so that every r(s, a) < 0.
  TabularMDP(std::vector<std::vector<std::vector<double>>> transitions,
             std::vector<std::vector<double>> rewards, std::size_t horizon,
             std::size_t initial_state = 0);

  static TabularMDP random(std::size_t n_states, std::size_t n_actions, std::size_t horizon,
                           bool deterministic, Rng& rng);

  std::size_t n_states() const { return rewards_.size(); }
  std::size_t n_actions() const { return rewards_.front().size(); }
  std::size_t horizon() const { return horizon_; }
  std::size_t initial_state() const { return initial_state_; }
  double transition(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions_[s][a][next];
  }
  double reward(std::size_t s, std::size_t a) const { return rewards_[s][a]; }
  double action_prior(std::size_t) const { return 1.0 / static_cast<double>(n_actions()); }
  bool deterministic() const;

  std::size_t reset(Rng&) const { return initial_state_; }
  /// Samples s' and returns (s', r(s, a)).
  std::pair<std::size_t, double> step(std::size_t s, std::size_t a, Rng& rng) const;

private:
  std::vector<std::vector<std::vector<double>>> transitions_;
  std::vector<std::vector<double>> rewards_;
  std::size_t horizon_;
  std::size_t initial_state_;
};

}  // namespace lsp
