#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lsp/oracle/oracle.hpp"

using namespace lsp;
using namespace lsp::oracle;

namespace {

double max_row_error(const TabularPolicy& p) {
  double worst = 0.0;
  for (const auto& t : p)
    for (const auto& row : t) {
      double s = 0.0;
      for (double x : row) s += x;
      worst = std::max(worst, std::abs(s - 1.0));
    }
  return worst;
}

double max_diff(const TabularPolicy& a, const TabularPolicy& b) {
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t s = 0; s < a[t].size(); ++s)
      for (std::size_t k = 0; k < a[t][s].size(); ++k)
        worst = std::max(worst, std::abs(a[t][s][k] - b[t][s][k]));
  return worst;
}

}  // namespace

TEST_CASE("constant reward gives the prior") {
  TabularMDP mdp({{{1, 0}, {0, 1}}, {{0.5, 0.5}, {1, 0}}}, {{0, 0}, {0, 0}}, 3);
  const auto post = enumerate_posterior(mdp);
  for (const auto& t : post.probs)
    for (const auto& row : t)
      for (double p : row) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("two-step hand enumeration") {
  // deterministic: action a moves to state a
  const std::vector<std::vector<double>> r{{-1, -2}, {-2, -1}};
  TabularMDP mdp({{{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}}, r, 1);
  const auto post = enumerate_posterior(mdp);
  // weight of the first action: p(a) e^{r(0,a)} * sum_b p(b) e^{r(a,b)}
  auto w = [&](std::size_t a) {
    return 0.5 * std::exp(r[0][a]) * (0.5 * std::exp(r[a][0]) + 0.5 * std::exp(r[a][1]));
  };
  CHECK(post.probs[0][0][0] == doctest::Approx(w(0) / (w(0) + w(1))).epsilon(1e-12));
  // last step: softmax of the immediate reward
  const double e1 = std::exp(-1.0), e2 = std::exp(-2.0);
  CHECK(post.probs[1][1][1] == doctest::Approx(e1 / (e1 + e2)).epsilon(1e-12));
}

TEST_CASE("terminal step of soft value iteration") {
  Rng rng(1);
  const auto mdp = TabularMDP::random(3, 3, 0, false, rng);
  const auto soft = soft_value_iteration(mdp);
  for (std::size_t s = 0; s < 3; ++s) {
    double z = 0.0;
    for (std::size_t a = 0; a < 3; ++a) z += std::exp(mdp.reward(s, a)) / 3.0;
    for (std::size_t a = 0; a < 3; ++a)
      CHECK(soft.policy[0][s][a] == doctest::Approx(std::exp(mdp.reward(s, a)) / 3.0 / z).epsilon(1e-12));
    CHECK(soft.v[0][s] == doctest::Approx(std::log(z)).epsilon(1e-12));
  }
}

TEST_CASE("enumeration and soft value iteration agree on deterministic mdps") {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto ns = 1 + rng.index(5), na = 1 + rng.index(3), horizon = rng.index(5);
    const auto mdp = TabularMDP::random(ns, na, horizon, true, rng);
    const auto post = enumerate_posterior(mdp);
    const auto soft = soft_value_iteration(mdp);
    CHECK(max_diff(post.probs, soft.policy) < 1e-9);
    CHECK(max_row_error(post.probs) < 1e-10);
    CHECK(max_row_error(soft.policy) < 1e-12);
  }
}

TEST_CASE("soft value iteration maximises the variational objective") {
  Rng rng(3);
  const auto mdp = TabularMDP::random(4, 3, 3, false, rng);
  const double best = variational_objective(mdp, soft_value_iteration(mdp).policy);
  // the optimum equals the soft value of the initial state
  CHECK(best == doctest::Approx(soft_value_iteration(mdp).v[0][0]).epsilon(1e-12));
  for (int i = 0; i < 1000; ++i) CHECK(variational_objective(mdp, random_policy(mdp, rng)) <= best + 1e-12);
}

TEST_CASE("risky branch separates posterior and variational policies") {
  const auto mdp = risky_branch_mdp();
  const auto post = enumerate_posterior(mdp);
  const auto soft = soft_value_iteration(mdp);
  CHECK(post.probs[0][0][1] > soft.policy[0][0][1]);
  CHECK(variational_objective(mdp, soft.policy) > variational_objective(mdp, post.probs));
}

TEST_CASE("enumeration size guard") {
  Rng rng(4);
  const auto mdp = TabularMDP::random(10, 10, 7, false, rng);
  CHECK_THROWS_AS(enumerate_posterior(mdp), std::length_error);
}

TEST_CASE("numeric jacobian") {
  const Vec x{0.3, -1.2, 2.0};
  const auto id = numeric_jacobian(Map([](std::span<const double> v) { return Vec(v.begin(), v.end()); }), x);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(id[i][j] - (i == j)) < 1e-9);

  const Matrix A{{1.0, 2.0, -1.0}, {0.5, -3.0, 4.0}};
  const auto lin = numeric_jacobian(
      Map([&](std::span<const double> v) {
        Vec out(2, 0.0);
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < 3; ++j) out[i] += A[i][j] * v[j];
        return out;
      }),
      x);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(lin[i][j] - A[i][j]) < 1e-8);

  const auto ex = numeric_jacobian(Map([](std::span<const double> v) {
                                     Vec out;
                                     for (double t : v) out.push_back(std::exp(t));
                                     return out;
                                   }),
                                   x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(ex[i][i] - std::exp(x[i])) / std::exp(x[i]) < 1e-8);

  CHECK_THROWS(numeric_jacobian(Map([](std::span<const double> v) { return Vec{std::log(v[0])}; }), Vec{0.0}));
}

TEST_CASE("log abs det") {
  CHECK(log_abs_det({{2.0, 0.0}, {0.0, -3.0}}) == doctest::Approx(std::log(6.0)));
  CHECK(log_abs_det({{0.0, 1.0}, {1.0, 0.0}}) == doctest::Approx(0.0));
  CHECK(log_abs_det({{1.0, 2.0}, {3.0, 4.0}}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("grid integration") {
  const Gaussian g{{0.0, 0.0}, 1.0};
  CHECK(grid_integrate_density([&](std::span<const double> a) { return g.log_density(a); }, 2, -6, 6, 400) ==
        doctest::Approx(1.0).epsilon(0.005));
  CHECK(grid_integrate_density([](std::span<const double>) { return -std::numeric_limits<double>::infinity(); },
                               2, -6, 6, 50) == 0.0);
  CHECK_THROWS(grid_integrate_density([](std::span<const double>) { return 0.0; }, 3, -1, 1, 10));
}

TEST_CASE("bandit posterior") {
  const auto g = bandit_posterior(0.5, {1.0, -1.0});
  CHECK(g.variance == 1.0);
  CHECK(g.mean == Vec{1.0, -1.0});
  CHECK(bandit_posterior(0.5, {1.0, -1.0}, 1e6).variance < 1e-5);
  CHECK(bandit_posterior(2.0, {5.0}).variance == bandit_posterior(2.0, {-3.0}).variance);
  CHECK_THROWS(bandit_posterior(0.0, {1.0}));
  CHECK_THROWS(bandit_posterior(-1.0, {1.0}));
}
