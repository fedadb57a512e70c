#include <doctest.h>

#include <cmath>

#include "lsp/envs/bandit.hpp"
#include "lsp/envs/point_envs.hpp"
#include "lsp/envs/tabular_mdp.hpp"

using namespace lsp;

TEST_CASE("maze reset") {
  auto env = PointMassEnv::maze(0);
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    const Vec o1 = env->reset(a);
    CHECK(env->inside_wall_free_region(env->position()));
    CHECK(o1[2] == 0.0);
    CHECK(o1[3] == 0.0);
    auto other = PointMassEnv::maze(0);
    CHECK(other->reset(b) == o1);
  }
}

TEST_CASE("point mass dynamics") {
  auto env = PointMassEnv::open_arena();
  Rng rng(1);
  env->reset(rng);
  SUBCASE("zero action from rest") {
    const auto r = env->step(Vec{0.0, 0.0});
    CHECK(r.rewards.at("velocity_norm") == 0.0);
    CHECK_FALSE(r.terminal);
    CHECK_FALSE(r.rewards.count("sparse_goal"));
  }
  SUBCASE("speed bounded and state finite under huge actions") {
    for (int t = 0; t < 300; ++t) {
      const auto r = env->step(Vec{1e9 * std::sin(t), -1e9});
      CHECK(r.rewards.at("velocity_norm") <= 2.0 + 1e-12);
      for (double x : r.observation) CHECK(std::isfinite(x));
    }
  }
  SUBCASE("one step of the update rule") {
    env->set_state({2.0, 2.0}, {0.5, -0.5});
    const auto r = env->step(Vec{1.0, 3.0});  // second component clipped to 2
    const double vx = 0.95 * 0.5 + 0.05 * 1.0, vy = 0.95 * -0.5 + 0.05 * 2.0;
    CHECK(env->velocity().x == doctest::Approx(vx));
    CHECK(env->velocity().y == doctest::Approx(vy));
    CHECK(env->position().x == doctest::Approx(2.0 + 0.05 * vx));
    CHECK(r.rewards.at("velocity_norm") == doctest::Approx(std::hypot(vx, vy)));
  }
  SUBCASE("wrong action size") { CHECK_THROWS_AS(env->step(Vec{1.0}), EnvError); }
  SUBCASE("NaN action") { CHECK_THROWS_AS(env->step(Vec{NAN, 0.0}), EnvError); }
}

TEST_CASE("walls stop motion") {
  auto env = PointMassEnv::maze(1);
  // just below the floor of the U, moving up fast
  env->set_state({2.0, 1.79}, {0.0, 2.0});
  env->step(Vec{0.0, 2.0});
  CHECK(env->position().x == 2.0);
  CHECK(env->position().y == 1.79);
  CHECK(env->velocity().y == 0.0);
  // arena border
  env->set_state({0.01, 3.0}, {-2.0, 0.0});
  env->step(Vec{-2.0, 0.0});
  CHECK(env->position().x == 0.01);
}

TEST_CASE("goal reward and termination") {
  auto env = PointMassEnv::maze(2);
  const Point2 g = env->layout().goals[2];
  env->set_state({g.x + 0.25, g.y}, {0.0, 0.0});
  auto r = env->step(Vec{0.0, 0.0});
  CHECK(r.rewards.at("sparse_goal") == 1000.0);
  CHECK(r.terminal);
  env->set_state({g.x + 0.2501, g.y}, {0.0, 0.0});
  r = env->step(Vec{0.0, 0.0});
  CHECK(r.rewards.at("sparse_goal") == 0.0);
  CHECK_FALSE(r.terminal);
  CHECK(r.observation[4] == doctest::Approx(-0.2501));
  CHECK(r.observation[5] == 0.0);
}

TEST_CASE("pretraining variant") {
  auto maze = PointMassEnv::maze(0);
  auto variant = maze->pretraining_variant();
  CHECK(variant->spec().observation_dim == maze->spec().observation_dim);
  CHECK(variant->spec().action_dim == maze->spec().action_dim);
  CHECK(variant->spec().has_channel("velocity_norm"));
  CHECK_FALSE(variant->spec().has_channel("sparse_goal"));
  CHECK(maze->spec().has_channel("sparse_goal"));

  auto* plane = dynamic_cast<PointMassEnv*>(variant.get());
  REQUIRE(plane);
  CHECK(maze->blocked({2.0, 1.0}, {2.0, 2.0}));
  CHECK_FALSE(plane->blocked({2.0, 1.0}, {2.0, 2.0}));
  Rng rng(3);
  const Vec o = plane->reset(rng);
  CHECK(o[4] == 0.0);
  CHECK(o[5] == 0.0);
  CHECK_THROWS(QuadraticBandit(1.0, {0.0}).pretraining_variant());
}

TEST_CASE("point envs are deterministic given seed and actions") {
  auto run = [] {
    auto env = PointMassEnv::maze(0);
    Rng rng(77);
    std::vector<Vec> obs{env->reset(rng)};
    for (int t = 0; t < 200; ++t) obs.push_back(env->step(Vec{std::cos(0.1 * t), std::sin(0.07 * t)}).observation);
    return obs;
  };
  CHECK(run() == run());
}

TEST_CASE("quadratic bandit") {
  QuadraticBandit env(0.5, {1.0, -1.0});
  CHECK(env.spec().max_episode_steps == 1);
  CHECK(env.spec().observation_dim == 1);
  Rng rng(0);
  CHECK(env.reset(rng) == Vec{1.0});
  const auto r = env.step(Vec{0.0, 0.0});
  CHECK(r.rewards.at("task") == -1.0);
  CHECK(r.terminal);
  CHECK(env.step(Vec{1.0, -1.0}).rewards.at("task") == 0.0);
  CHECK(env.step(Vec{100.0, 0.0}).rewards.at("task") == -0.5 * (99.0 * 99.0 + 1.0));
  CHECK_THROWS_AS(env.step(Vec{1.0}), EnvError);
}

TEST_CASE("tabular mdp") {
  Rng rng(4);
  SUBCASE("rows renormalise and rewards are negative") {
    TabularMDP mdp({{{2.0, 2.0}, {1.0, 3.0}}, {{0.0, 5.0}, {1.0, 1.0}}}, {{0.5, -1.0}, {0.0, -2.0}}, 2);
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t a = 0; a < 2; ++a) {
        CHECK(std::abs(mdp.transition(s, a, 0) + mdp.transition(s, a, 1) - 1.0) < 1e-12);
        CHECK(mdp.reward(s, a) < 0.0);
      }
    // shifted by a constant: differences preserved
    CHECK(mdp.reward(0, 0) - mdp.reward(0, 1) == doctest::Approx(1.5));
    CHECK(mdp.transition(0, 1, 1) == 0.75);
  }
  SUBCASE("reset returns the initial state") {
    const auto mdp = TabularMDP::random(4, 3, 3, false, rng);
    for (int i = 0; i < 20; ++i) CHECK(mdp.reset(rng) == 0);
    CHECK(mdp.action_prior(1) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("random deterministic instances") {
    const auto mdp = TabularMDP::random(5, 3, 4, true, rng);
    CHECK(mdp.deterministic());
    for (std::size_t s = 0; s < 5; ++s)
      for (std::size_t a = 0; a < 3; ++a) CHECK(mdp.reward(s, a) < 0.0);
  }
}
