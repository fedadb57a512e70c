#include "lsp/envs/tabular_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lsp {

TabularMDP::TabularMDP(std::vector<std::vector<std::vector<double>>> transitions,
                       std::vector<std::vector<double>> rewards, std::size_t horizon,
                       std::size_t initial_state)
    : transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      horizon_(horizon),
      initial_state_(initial_state) {
  const std::size_t ns = rewards_.size();
  if (ns == 0 || rewards_.front().empty()) throw std::invalid_argument("tabular MDP: empty tables");
  const std::size_t na = rewards_.front().size();
  if (transitions_.size() != ns || initial_state_ >= ns)
    throw std::invalid_argument("tabular MDP: inconsistent state count");
  double max_r = -INFINITY;
  for (std::size_t s = 0; s < ns; ++s) {
    if (rewards_[s].size() != na || transitions_[s].size() != na)
      throw std::invalid_argument("tabular MDP: inconsistent action count");
    for (std::size_t a = 0; a < na; ++a) {
      auto& row = transitions_[s][a];
      if (row.size() != ns) throw std::invalid_argument("tabular MDP: transition row size");
      double total = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw std::invalid_argument("tabular MDP: negative transition probability");
        total += p;
      }
      if (!(total > 0.0)) throw std::invalid_argument("tabular MDP: empty transition row");
      for (double& p : row) p /= total;
      if (!std::isfinite(rewards_[s][a])) throw std::invalid_argument("tabular MDP: non-finite reward");
      max_r = std::max(max_r, rewards_[s][a]);
    }
  }
  if (max_r >= 0.0)
    for (auto& r : rewards_)
      for (double& v : r) v -= max_r + 1.0;
}

TabularMDP TabularMDP::random(std::size_t n_states, std::size_t n_actions, std::size_t horizon,
                              bool deterministic, Rng& rng) {
  std::vector<std::vector<std::vector<double>>> p(
      n_states, std::vector<std::vector<double>>(n_actions, std::vector<double>(n_states, 0.0)));
  std::vector<std::vector<double>> r(n_states, std::vector<double>(n_actions));
  for (std::size_t s = 0; s < n_states; ++s)
    for (std::size_t a = 0; a < n_actions; ++a) {
      r[s][a] = -rng.uniform(0.05, 3.0);
      if (deterministic)
        p[s][a][rng.index(n_states)] = 1.0;
      else
        for (double& v : p[s][a]) v = rng.uniform(0.0, 1.0);
    }
  return TabularMDP(std::move(p), std::move(r), horizon);
}

bool TabularMDP::deterministic() const {
  for (const auto& per_s : transitions_)
    for (const auto& row : per_s)
      if (std::count(row.begin(), row.end(), 1.0) != 1) return false;
  return true;
}

std::pair<std::size_t, double> TabularMDP::step(std::size_t s, std::size_t a, Rng& rng) const {
  const auto& row = transitions_.at(s).at(a);
  double u = rng.uniform();
  std::size_t next = row.size() - 1;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (u < row[i]) {
      next = i;
      break;
    }
    u -= row[i];
  }
  return {next, rewards_[s][a]};
}

}  // namespace lsp
