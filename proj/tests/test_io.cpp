#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lsp/io/checkpoint.hpp"
#include "lsp/io/config.hpp"
#include "lsp/io/experiment.hpp"
#include "support.hpp"

using namespace lsp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lsp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json tiny_maze_config() {
  json trainer = {{"batch_size", 16},  {"steps_per_epoch", 40}, {"min_pool_size", 32},
                  {"total_epochs", 2}, {"hidden_units", 16},    {"max_path_length", 30}};
  return {{"env", {{"name", "point_maze"}, {"params", {{"goal", 1}, {"max_episode_steps", 30}}}}},
          {"seed", 5},
          {"eval_rollouts", 3},
          {"layers",
           {{{"reward", "velocity_norm"},
             {"prior", "gaussian"},
             {"pretraining_env", true},
             {"flow", {{"embed_hidden", 16}}},
             {"trainer", trainer}},
            {{"reward", "sparse_goal"},
             {"action_repeat", 2},
             {"flow", {{"embed_hidden", 16}}},
             {"trainer", trainer}}}}};
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(tiny_maze_config());
  REQUIRE(cfg.layers.size() == 2);
  CHECK(cfg.env.name == "point_maze");
  CHECK(cfg.layers[0].trainer.action_prior == ActionPrior::gaussian);
  CHECK(cfg.layers[1].trainer.action_prior == ActionPrior::gaussian);
  CHECK(cfg.layers[0].pretraining_env);
  CHECK(cfg.layers[1].action_repeat == 2);
  CHECK(cfg.layers[0].trainer.batch_size == 16);
  CHECK(cfg.layers[0].trainer.seed != cfg.layers[1].trainer.seed);
  CHECK(cfg.layers[0].trainer.eval_rollouts == 3);
  CHECK(cfg.hash() == parse_config(tiny_maze_config()).hash());
  CHECK(cfg.hash().size() == 64);

  json single = {{"env", {{"name", "quadratic_bandit"}}}, {"layers", {{{"reward", "task"}}}}};
  const auto s = parse_config(single);
  CHECK(s.layers[0].trainer.action_prior == ActionPrior::uniform);
  CHECK(s.layers[0].trainer.discount == 0.99);
}

TEST_CASE("config errors name the key") {
  auto expect = [](json doc, const std::string& fragment) {
    try {
      parse_config(doc);
      FAIL("expected a config error for " << fragment);
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
    }
  };
  json doc = tiny_maze_config();
  doc["colour"] = "blue";
  expect(doc, "colour");
  doc = tiny_maze_config();
  doc["layers"][1]["trainer"]["batch"] = 3;
  expect(doc, "config.layers[1].trainer: unknown key 'batch'");
  doc = tiny_maze_config();
  doc["layers"][0].erase("reward");
  expect(doc, "reward");
  doc = tiny_maze_config();
  doc["layers"][0]["trainer"]["discount"] = "high";
  expect(doc, "discount");
  doc = tiny_maze_config();
  doc["layers"][0]["trainer"]["discount"] = 1.5;
  expect(doc, "discount");
  doc = tiny_maze_config();
  doc["layers"][0]["latent_mode"] = "often";
  expect(doc, "often");
  doc = tiny_maze_config();
  doc["env"]["name"] = "cartpole";
  expect(doc, "cartpole");
  doc = tiny_maze_config();
  doc["env"]["params"]["goal"] = 7;
  expect(doc, "goal");
  doc = tiny_maze_config();
  doc["layers"][0]["action_repeat"] = -3;
  expect(doc, "action_repeat");
}

TEST_CASE("syntax errors report the line") {
  const fs::path dir = scratch_dir("syntax");
  std::ofstream(dir / "bad.json") << "{\n  \"seed\": 1,\n  \"env\": {\n    \"name\": \n  }\n}\n";
  try {
    load_config((dir / "bad.json").string());
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(1);
  StackLayer layer;
  layer.policy = std::make_shared<const FlowPolicy>(lsp::testing::perturbed_flow({6, 2, 2, 16}, rng));
  layer.reward = "sparse_goal";
  layer.prior = ActionPrior::gaussian;
  layer.latent_mode = LatentMode::hold_n;
  layer.latent_hold = 3;
  layer.action_repeat = 2;
  const fs::path dir = scratch_dir("ckpt");
  const std::string path = (dir / "layer.json").string();
  save_checkpoint(path, layer, "abc123");

  const StackLayer back = load_checkpoint(path);
  const auto a = layer.policy->parameters(), b = back.policy->parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(a[i]->value == b[i]->value);
  }
  CHECK(back.reward == "sparse_goal");
  CHECK(back.prior == ActionPrior::gaussian);
  CHECK(back.latent_mode == LatentMode::hold_n);
  CHECK(back.latent_hold == 3);
  CHECK(back.action_repeat == 2);
  CHECK(checkpoint_config_hash(path) == "abc123");
  CHECK_THROWS_AS(load_checkpoint(path, 3), CheckpointError);
  CHECK_NOTHROW(load_checkpoint(path, 2, 6));

  json doc = checkpoint_to_json(layer, "h");
  doc["topology"].erase("action_dim");
  try {
    checkpoint_from_json(doc);
    FAIL("expected an error");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("action_dim") != std::string::npos);
  }
  const std::string some_param = layer.policy->parameters()[3]->name;
  doc = checkpoint_to_json(layer, "h");
  doc["parameters"].erase(some_param);
  try {
    checkpoint_from_json(doc);
    FAIL("expected an error");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find(some_param) != std::string::npos);
  }
  doc = checkpoint_to_json(layer, "h");
  doc["parameters"][some_param]["data"].erase(0);
  CHECK_THROWS_AS(checkpoint_from_json(doc), CheckpointError);
  std::ofstream(dir / "corrupt.json") << "{\"format\": ";
  CHECK_THROWS_AS(load_checkpoint((dir / "corrupt.json").string()), CheckpointError);
}

TEST_CASE("metrics rows") {
  EpochMetrics m;
  m.epoch = 3;
  m.total_env_steps = 3000;
  m.mean_return = 0.1;
  m.wall_clock_seconds = 12.5;
  const std::string row = metrics_row(m, false);
  CHECK(row.rfind("3,3000,0.10000000000000001,", 0) == 0);
  CHECK(row.substr(row.size() - 2) == ",0");
  const std::string timed = metrics_row(m, true);
  CHECK(timed.substr(timed.size() - 5) == ",12.5");
  CHECK(std::count(row.begin(), row.end(), ',') == 8);
}

TEST_CASE("runs write reproducible outputs") {
  const ExperimentConfig cfg = parse_config(tiny_maze_config());
  const fs::path root = scratch_dir("run");
  const auto r1 = run_experiment(cfg, (root / "a").string());
  run_experiment(cfg, (root / "b").string());

  for (const char* f : {"config.json", "metrics.csv", "metrics_layer0.csv", "metrics_layer1.csv",
                        "layer_0.json", "layer_1.json", "stack.json", "timing.csv"})
    CHECK_MESSAGE(fs::exists(root / "a" / f), f);
  CHECK_FALSE(fs::exists(root / "a" / "error.json"));
  const std::string metrics = slurp(root / "a" / "metrics.csv");
  CHECK(metrics == slurp(root / "b" / "metrics.csv"));
  CHECK(slurp(root / "a" / "metrics_layer0.csv") == slurp(root / "b" / "metrics_layer0.csv"));
  CHECK(metrics.substr(0, metrics.find('\n')) == kMetricsHeader);
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 3);
  CHECK(checkpoint_config_hash((root / "a" / "layer_1.json").string()) == cfg.hash());
  CHECK(r1.metrics[1][1].total_env_steps > r1.metrics[1][0].total_env_steps);

  SUBCASE("evaluation round trips through the checkpoint") {
    const auto env = make_environment(cfg.env);
    const auto direct = evaluate_stack(*env, r1.stack, 10, 7, 30, false);
    const auto loaded = evaluate_checkpoint((root / "a" / "stack.json").string(), cfg.env, 10, 7, true);
    REQUIRE(loaded.stats.rollouts.size() == 10);
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(loaded.stats.rollouts[i].total_return == direct.rollouts[i].total_return);
    CHECK(loaded.stats.mean_return == direct.mean_return);
    write_trajectory_dump((root / "dump.csv").string(), loaded.stats);
    const std::string dump = slurp(root / "dump.csv");
    CHECK(dump.rfind("rollout,step,s0,s1,s2,s3,s4,s5,a0,a1,reward\n", 0) == 0);
  }

  SUBCASE("evaluation rejects a mismatched environment") {
    EnvConfig bandit{"quadratic_bandit", json::object()};
    CHECK_THROWS_AS(evaluate_checkpoint((root / "a" / "stack.json").string(), bandit, 2, 0, false),
                    ShapeError);
  }

  SUBCASE("stacking on a saved run") {
    json more = tiny_maze_config();
    more["layers"].erase(0);
    const auto extra = parse_config(more);
    const auto r3 = run_experiment(extra, (root / "c").string(), load_stack((root / "a" / "stack.json").string()));
    CHECK(r3.stack.size() == 3);
    CHECK(fs::exists(root / "c" / "layer_2.json"));
    CHECK(fs::exists(root / "c" / "metrics_layer2.csv"));
  }
}

TEST_CASE("failed runs leave partial outputs and a manifest") {
  json doc = tiny_maze_config();
  doc["layers"][1]["reward"] = "no_such_channel";
  const ExperimentConfig cfg = parse_config(doc);
  const fs::path dir = scratch_dir("fail");
  CHECK_THROWS(run_experiment(cfg, dir.string()));
  CHECK(fs::exists(dir / "layer_0.json"));
  CHECK(fs::exists(dir / "metrics_layer0.csv"));
  REQUIRE(fs::exists(dir / "error.json"));
  const json manifest = json::parse(slurp(dir / "error.json"));
  CHECK(manifest["completed_layers"] == 1);
  CHECK(manifest["error"].get<std::string>().find("no_such_channel") != std::string::npos);
}

TEST_CASE("oracle checks pass") {
  std::ostringstream out;
  const auto results = run_oracle_checks(0, out);
  CHECK(results.size() == 5);
  for (const auto& r : results) CHECK_MESSAGE(r.passed, r.name << ": " << r.detail);
}
