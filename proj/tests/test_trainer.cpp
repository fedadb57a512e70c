#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lsp/envs/bandit.hpp"
#include "lsp/rl/replay_pool.hpp"
#include "lsp/rl/trainer.hpp"
#include "support.hpp"
#include "test_envs.hpp"

using namespace lsp;
using lsp::testing::ConstantRewardEnv;
using lsp::testing::ScaledRewardEnv;

namespace {

TrainerConfig small_config(std::uint64_t seed = 1) {
  TrainerConfig c;
  c.seed = seed;
  c.batch_size = 16;
  c.steps_per_epoch = 60;
  c.min_pool_size = 32;
  c.total_epochs = 2;
  c.hidden_units = 16;
  c.eval_rollouts = 3;
  return c;
}

FlowPolicy small_flow(const Environment& env, std::uint64_t seed) {
  Rng rng(seed);
  return FlowPolicy({env.spec().observation_dim, env.spec().action_dim, 2, 16}, rng);
}

}  // namespace

TEST_CASE("trainer config defaults and validation") {
  TrainerConfig c;
  CHECK(c.discount == 0.99);
  CHECK(c.target_smoothing == 1e-2);
  CHECK(c.batch_size == 128);
  CHECK(c.steps_per_epoch == 1000);
  CHECK(c.min_pool_size == 1000);
  CHECK(c.max_path_length == 1000);
  CHECK(c.pool_capacity == 1'000'000);
  CHECK(c.learning_rate == 3e-4);
  CHECK_NOTHROW(c.validate());
  c.discount = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.discount = 0.9;
  c.target_smoothing = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.target_smoothing = 1.0;
  CHECK_NOTHROW(c.validate());
  CHECK(parse_action_prior("gaussian") == ActionPrior::gaussian);
  CHECK_THROWS(parse_action_prior("laplace"));
}

TEST_CASE("replay pool") {
  ReplayPool pool(5, 1, 1);
  for (int i = 0; i < 8; ++i) {
    pool.add({{double(i)}, {0.0}, double(i), {0.0}, false});
    CHECK(pool.size() == std::min(i + 1, 5));
  }
  // oldest entries overwritten
  std::vector<double> kept;
  for (std::size_t i = 0; i < pool.size(); ++i) kept.push_back(pool.at(i).reward);
  std::sort(kept.begin(), kept.end());
  CHECK(kept == std::vector<double>{3, 4, 5, 6, 7});
  Rng rng(1);
  const auto batch = pool.sample(4, rng);
  CHECK(batch.states.shape() == Shape{4, 1});
  CHECK(batch.rewards.shape() == Shape{4});
  for (std::size_t i = 0; i < 4; ++i) CHECK(batch.states[i] == batch.rewards[i]);
}

TEST_CASE("replay sampling is uniform") {
  const std::size_t n = 50, draws = 50000;
  ReplayPool pool(n, 1, 1);
  for (std::size_t i = 0; i < n; ++i) pool.add({{double(i)}, {0.0}, 0.0, {0.0}, false});
  Rng rng(2);
  std::vector<double> counts(n, 0.0);
  for (std::size_t d = 0; d < draws / 100; ++d)
    for (std::size_t idx : pool.sample(100, rng).indices) counts[idx] += 1.0;
  const double expected = double(draws) / n;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99th percentile of chi-square with 49 degrees of freedom
  CHECK(chi2 < 74.92);
}

TEST_CASE("target update") {
  Rng rng(3);
  Mlp live("v", {2, 3, 1}, rng), target("v", {2, 3, 1}, rng);
  auto set_all = [](Mlp& m, double v) {
    for (Parameter* p : m.parameters()) p->value.fill(v);
  };
  set_all(live, 1.0);
  set_all(target, 0.0);
  target_update(target, live, 0.01);
  for (const Parameter* p : std::as_const(target).parameters())
    for (double x : p->value.storage()) CHECK(x == doctest::Approx(0.01).epsilon(1e-15));
  for (int n = 2; n <= 50; ++n) {
    target_update(target, live, 0.01);
    const double gap = 1.0 - target.parameters().front()->value[0];
    CHECK(gap == doctest::Approx(std::pow(0.99, n)).epsilon(1e-12));
  }
  live.parameters().front()->value[0] = 7.5;
  target_update(target, live, 1.0);
  for (std::size_t i = 0; i < live.parameters().size(); ++i)
    CHECK(target.parameters()[i]->value == live.parameters()[i]->value);
  Mlp other("o", {2, 4, 1}, rng);
  CHECK_THROWS_AS(target_update(other, live, 0.5), ShapeError);
}

TEST_CASE("collect step") {
  ConstantRewardEnv env(-1.0, 7);
  FlowPolicy policy = small_flow(env, 4);
  TrainerConfig cfg = small_config();
  cfg.pool_capacity = 10;
  cfg.min_pool_size = 8;
  cfg.reward_scale = 3.0;
  MaxEntTrainer trainer(env, policy, cfg);
  CHECK_THROWS_AS(trainer.update_step(), std::logic_error);
  for (std::size_t i = 1; i <= 15; ++i) {
    const Transition t = trainer.collect_step();
    CHECK(t.reward == -3.0);
    CHECK(trainer.pool().size() == std::min<std::size_t>(i, 10));
  }
  CHECK_NOTHROW(trainer.update_step());
}

TEST_CASE("episodes reset at the path limit") {
  ConstantRewardEnv env(0.0, 5);
  FlowPolicy policy = small_flow(env, 5);
  TrainerConfig cfg = small_config();
  cfg.max_path_length = 3;
  MaxEntTrainer trainer(env, policy, cfg);
  CHECK(trainer.path_limit() == 3);
  for (int i = 0; i < 9; ++i) {
    const Transition t = trainer.collect_step();
    CHECK(t.state[1] == doctest::Approx((i % 3) / 5.0));
  }
}

TEST_CASE("first transitions repeat under a fixed seed") {
  auto collect = [] {
    QuadraticBandit env(0.5, {1.0, -1.0});
    FlowPolicy policy = small_flow(env, 6);
    MaxEntTrainer trainer(env, policy, small_config(9));
    std::vector<Vec> actions;
    for (int i = 0; i < 100; ++i) actions.push_back(trainer.collect_step().action);
    return actions;
  };
  CHECK(collect() == collect());
}

TEST_CASE("no updates before the pool is warm, one per step after") {
  ConstantRewardEnv env(0.0, 10);
  FlowPolicy policy = small_flow(env, 7);
  const auto before = parameter_digest(std::as_const(policy).parameters());
  TrainerConfig cfg = small_config();
  cfg.total_epochs = 1;
  cfg.steps_per_epoch = 40;
  cfg.min_pool_size = 41;
  {
    MaxEntTrainer trainer(env, policy, cfg);
    trainer.train();
  }
  CHECK(parameter_digest(std::as_const(policy).parameters()) == before);
  cfg.min_pool_size = 40;
  MaxEntTrainer trainer(env, policy, cfg);
  trainer.train();
  CHECK(parameter_digest(std::as_const(policy).parameters()) != before);
}

TEST_CASE("training emits one row per epoch and is deterministic") {
  auto run = [] {
    QuadraticBandit env(0.5, {1.0, -1.0});
    FlowPolicy policy = small_flow(env, 8);
    TrainerConfig cfg = small_config(3);
    cfg.total_epochs = 4;
    MaxEntTrainer trainer(env, policy, cfg);
    return trainer.train();
  };
  const auto a = run(), b = run();
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].epoch == i + 1);
    CHECK(a[i].total_env_steps == 60 * (i + 1));
    CHECK(a[i].mean_return == b[i].mean_return);
    CHECK(a[i].q_loss == b[i].q_loss);
    CHECK(a[i].policy_loss == b[i].policy_loss);
    CHECK(a[i].entropy_estimate == b[i].entropy_estimate);
  }
}

TEST_CASE("gaussian prior cancels the log-density at the identity") {
  ConstantRewardEnv env(0.0, 10);
  FlowPolicy policy = small_flow(env, 9);
  TrainerConfig cfg = small_config();
  cfg.action_prior = ActionPrior::gaussian;
  cfg.learning_rate = 1e-12;  // keep the policy at the identity while measuring
  MaxEntTrainer trainer(env, policy, cfg);
  for (int i = 0; i < 40; ++i) trainer.collect_step();
  // At the identity log pi(a) - log p(a) is exactly zero, so the policy loss
  // is minus the mean Q and the entropy estimate is the prior entropy.
  const auto r = trainer.update_step();
  CHECK(std::isfinite(r.policy_loss));
  CHECK(r.mean_entropy_estimate > 0.0);
  Rng rng(0);
  const Vec obs{0.1, 0.2};
  const auto s = policy.sample(obs, rng);
  CHECK(s.log_prob - LatentPrior{2}.log_density(s.action) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("zero reward with a gaussian prior keeps the prior") {
  ConstantRewardEnv env(0.0, 20);
  FlowPolicy policy = small_flow(env, 10);
  TrainerConfig cfg = small_config(11);
  cfg.action_prior = ActionPrior::gaussian;
  cfg.discount = 0.9;
  cfg.total_epochs = 10;
  cfg.steps_per_epoch = 200;
  cfg.batch_size = 64;
  cfg.learning_rate = 1e-3;
  MaxEntTrainer trainer(env, policy, cfg);
  const auto rows = trainer.train();
  const double prior_entropy = LatentPrior{2}.entropy();
  CHECK(std::abs(rows.back().entropy_estimate - prior_entropy) < 0.1);
  // V should approach the entropy-regularised value of zero
  const Tensor v = trainer.nets().v.evaluate(Tensor::matrix(2, 2, {0.0, 0.0, 0.5, 0.5}));
  CHECK(std::abs(v[0]) < 0.5);
  CHECK(std::abs(v[1]) < 0.5);
}

TEST_CASE("scaling rewards by c and reward_scale by 1/c gives identical traces") {
  auto run = [](double c) {
    ScaledRewardEnv env(std::make_unique<QuadraticBandit>(0.5, Vec{1.0, -1.0}), c);
    FlowPolicy policy = small_flow(env, 12);
    TrainerConfig cfg = small_config(5);
    cfg.reward_scale = 1.0 / c;
    cfg.total_epochs = 3;
    MaxEntTrainer trainer(env, policy, cfg);
    auto rows = trainer.train();
    return std::make_pair(rows, parameter_digest(std::as_const(policy).parameters()));
  };
  const auto base = run(1.0);
  for (double c : {2.0, 0.25, 8.0}) {
    CAPTURE(c);
    const auto scaled = run(c);
    CHECK(scaled.second == base.second);
    for (std::size_t i = 0; i < base.first.size(); ++i) {
      CHECK(scaled.first[i].q_loss == base.first[i].q_loss);
      CHECK(scaled.first[i].v_loss == base.first[i].v_loss);
      CHECK(scaled.first[i].policy_loss == base.first[i].policy_loss);
    }
  }
}

TEST_CASE("non-finite loss raises a divergence error") {
  ConstantRewardEnv env(-1.0, 10, 2, 50);
  FlowPolicy policy = small_flow(env, 13);
  TrainerConfig cfg = small_config();
  cfg.min_pool_size = 16;
  MaxEntTrainer trainer(env, policy, cfg);
  try {
    trainer.train();
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("non-finite loss") != std::string::npos);
  }
}

TEST_CASE("parallel and serial evaluation agree") {
  QuadraticBandit env(0.5, {1.0, -1.0});
  Rng rng(14);
  FlowPolicy policy = lsp::testing::perturbed_flow({1, 2, 2, 8}, rng);
  RolloutOptions opts;
  opts.n_rollouts = 16;
  opts.seed = 99;
  opts.reward_channel = "task";
  opts.record_trajectories = true;
  const auto a = evaluate_policy(env, policy, opts), b = evaluate_policy_serial(env, policy, opts);
  REQUIRE(a.rollouts.size() == 16);
  CHECK(a.mean_return == b.mean_return);
  for (std::size_t i = 0; i < 16; ++i) CHECK(a.rollouts[i].total_return == b.rollouts[i].total_return);
  CHECK(a.success_rate == 1.0);  // every bandit episode is terminal
}

TEST_CASE("trainer rejects mismatched dims and unknown channels") {
  QuadraticBandit env(0.5, {1.0, -1.0});
  Rng rng(15);
  FlowPolicy wrong({1, 3}, rng);
  CHECK_THROWS_AS(MaxEntTrainer(env, wrong, small_config()), ShapeError);
  FlowPolicy right({1, 2}, rng);
  TrainerConfig cfg = small_config();
  cfg.reward_channel = "velocity_norm";
  CHECK_THROWS_AS(MaxEntTrainer(env, right, cfg), EnvError);
}
