#pragma once

// Reference computations used to validate the learned components. Nothing in
// here calls into the autodiff, flow or trainer code; policies are reached
// only through plain callables.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lsp/core/rng.hpp"
#include "lsp/envs/tabular_mdp.hpp"

namespace lsp::oracle {

using Vec = std::vector<double>;
using Matrix = std::vector<Vec>;
/// Time-indexed tabular policy, probs[t][s][a].
using TabularPolicy = std::vector<std::vector<Vec>>;

/// p(a_t | s_t, O_{t:T}) from the optimal-trajectory distribution.
struct TrajectoryPosterior {
  TabularPolicy probs;
};

/// Soft Q/V tables for t = 0..T and the induced policy.
struct SoftValues {
  std::vector<Matrix> q;  // q[t][s][a]
  Matrix v;               // v[t][s]
  TabularPolicy policy;
};

inline constexpr double kMaxTrajectories = 1e7;

/// Brute-force enumeration of every trajectory continuation. Throws
/// std::length_error when more than 1e7 trajectories would be needed.
TrajectoryPosterior enumerate_posterior(const TabularMDP& mdp);

/// Backward recursion V = log sum_a p(a) exp(Q), Q = r + E[V'], V(T+1) = 0.
SoftValues soft_value_iteration(const TabularMDP& mdp);

/// E_rho[sum_t r(s_t, a_t) - KL(pi(.|s_t) || p)] under the true dynamics,
/// starting from the initial state.
double variational_objective(const TabularMDP& mdp, const TabularPolicy& policy);

TabularPolicy random_policy(const TabularMDP& mdp, Rng& rng);

/// Three states: a safe self-loop, and a risky action that lands in a good
/// absorbing state with probability 0.2 and a bad one otherwise.
TabularMDP risky_branch_mdp(std::size_t horizon = 2);

using Map = std::function<Vec(std::span<const double>)>;
using ConditionalMap = std::function<Vec(std::span<const double>, std::span<const double>)>;

/// Central-difference Jacobian J[i][j] = d map_i / d x_j.
Matrix numeric_jacobian(const Map& map, std::span<const double> point, double step = 1e-5);
Matrix numeric_jacobian(const ConditionalMap& map, std::span<const double> point,
                        std::span<const double> obs, double step = 1e-5);

/// ln|det M| by LU decomposition with partial pivoting.
double log_abs_det(const Matrix& m);

using LogDensity = std::function<double(std::span<const double>)>;

/// Midpoint Riemann sum of exp(log_density) over [lo, hi]^dim, dim <= 2.
double grid_integrate_density(const LogDensity& log_density, std::size_t dim, double lo,
                              double hi, std::size_t resolution);

/// Isotropic Gaussian.
struct Gaussian {
  Vec mean;
  double variance = 1.0;
  double log_density(std::span<const double> x) const;
};

/// Max-ent optimum of the quadratic bandit under a uniform action prior:
/// pi*(a) proportional to exp(reward_scale * -k |a - target|^2).
Gaussian bandit_posterior(double k, const Vec& target, double reward_scale = 1.0);

}  // namespace lsp::oracle
