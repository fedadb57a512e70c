#include "lsp/oracle/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace lsp::oracle {

namespace {

/// Sum of trajectory weights prod p(s'|s,a) exp(r(s,a)) over every
/// continuation (a_t, s_{t+1}, ..., a_T) that starts with action `a` in state `s` at step `t`.
double continuation_weight(const TabularMDP& mdp, std::size_t t, std::size_t s, std::size_t a) {
  const std::size_t ns = mdp.n_states(), na = mdp.n_actions(), T = mdp.horizon();
  const std::size_t remaining = T - t;  // transitions that are followed by another action
  // Odometer over (s_{t+1}, a_{t+1}, ..., s_T, a_T).
  std::vector<std::size_t> digits(2 * remaining, 0);
  double total = 0.0;
  while (true) {
    double w = mdp.action_prior(a) * std::exp(mdp.reward(s, a));
    std::size_t cur_s = s, cur_a = a;
    for (std::size_t k = 0; k < remaining && w != 0.0; ++k) {
      const std::size_t next_s = digits[2 * k];
      const std::size_t next_a = digits[2 * k + 1];
      w *= mdp.transition(cur_s, cur_a, next_s);
      w *= mdp.action_prior(next_a) * std::exp(mdp.reward(next_s, next_a));
      cur_s = next_s;
      cur_a = next_a;
    }
    total += w;
    std::size_t k = 0;
    for (; k < digits.size(); ++k) {
      const std::size_t base = (k % 2 == 0) ? ns : na;
      if (++digits[k] < base) break;
      digits[k] = 0;
    }
    if (k == digits.size()) break;
  }
  return total;
}

}  // namespace

TrajectoryPosterior enumerate_posterior(const TabularMDP& mdp) {
  const std::size_t ns = mdp.n_states(), na = mdp.n_actions(), T = mdp.horizon();
  const double count = std::pow(static_cast<double>(na), static_cast<double>(T + 1)) *
                       std::pow(static_cast<double>(ns), static_cast<double>(T));
  if (count > kMaxTrajectories)
    throw std::length_error("enumerate_posterior: " + std::to_string(count) +
                            " trajectories exceed the enumeration limit");
  TrajectoryPosterior post;
  post.probs.assign(T + 1, std::vector<Vec>(ns, Vec(na, 0.0)));
  for (std::size_t t = 0; t <= T; ++t)
    for (std::size_t s = 0; s < ns; ++s) {
      Vec& row = post.probs[t][s];
      double z = 0.0;
      for (std::size_t a = 0; a < na; ++a) z += row[a] = continuation_weight(mdp, t, s, a);
      for (double& p : row) p /= z;
    }
  return post;
}

SoftValues soft_value_iteration(const TabularMDP& mdp) {
  const std::size_t ns = mdp.n_states(), na = mdp.n_actions(), T = mdp.horizon();
  SoftValues sv;
  sv.q.assign(T + 1, Matrix(ns, Vec(na, 0.0)));
  sv.v.assign(T + 2, Vec(ns, 0.0));
  sv.policy.assign(T + 1, std::vector<Vec>(ns, Vec(na, 0.0)));
  for (std::size_t t = T + 1; t-- > 0;) {
    for (std::size_t s = 0; s < ns; ++s) {
      double qmax = -INFINITY;
      for (std::size_t a = 0; a < na; ++a) {
        double q = mdp.reward(s, a);
        for (std::size_t n = 0; n < ns; ++n) q += mdp.transition(s, a, n) * sv.v[t + 1][n];
        sv.q[t][s][a] = q;
        qmax = std::max(qmax, q);
      }
      double acc = 0.0;
      for (std::size_t a = 0; a < na; ++a)
        acc += mdp.action_prior(a) * std::exp(sv.q[t][s][a] - qmax);
      sv.v[t][s] = qmax + std::log(acc);
      for (std::size_t a = 0; a < na; ++a)
        sv.policy[t][s][a] = mdp.action_prior(a) * std::exp(sv.q[t][s][a] - sv.v[t][s]);
    }
  }
  sv.v.pop_back();
  return sv;
}

double variational_objective(const TabularMDP& mdp, const TabularPolicy& policy) {
  const std::size_t ns = mdp.n_states(), na = mdp.n_actions(), T = mdp.horizon();
  if (policy.size() != T + 1) throw std::invalid_argument("policy horizon mismatch");
  Vec next(ns, 0.0), cur(ns, 0.0);
  for (std::size_t t = T + 1; t-- > 0;) {
    for (std::size_t s = 0; s < ns; ++s) {
      double j = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        const double p = policy[t][s][a];
        if (p == 0.0) continue;
        double future = 0.0;
        for (std::size_t n = 0; n < ns; ++n) future += mdp.transition(s, a, n) * next[n];
        j += p * (mdp.reward(s, a) - std::log(p / mdp.action_prior(a)) + future);
      }
      cur[s] = j;
    }
    std::swap(cur, next);
  }
  return next[mdp.initial_state()];
}

TabularPolicy random_policy(const TabularMDP& mdp, Rng& rng) {
  TabularPolicy pi(mdp.horizon() + 1, std::vector<Vec>(mdp.n_states(), Vec(mdp.n_actions())));
  for (auto& per_t : pi)
    for (auto& row : per_t) {
      double z = 0.0;
      for (double& p : row) z += p = -std::log(rng.uniform(1e-12, 1.0));  // Dirichlet(1)
      for (double& p : row) p /= z;
    }
  return pi;
}

TabularMDP risky_branch_mdp(std::size_t horizon) {
  // state 0: start, 1: bad sink, 2: good sink; action 0 safe, action 1 risky
  std::vector<std::vector<std::vector<double>>> p = {
      {{1.0, 0.0, 0.0}, {0.0, 0.8, 0.2}},
      {{0.0, 1.0, 0.0}, {0.0, 1.0, 0.0}},
      {{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}},
  };
  std::vector<std::vector<double>> r = {{-1.0, -1.0}, {-4.0, -4.0}, {-0.1, -0.1}};
  return TabularMDP(std::move(p), std::move(r), horizon);
}

}  // namespace lsp::oracle
