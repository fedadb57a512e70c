#include <cstdint>
#include "lsp/io/config.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "lsp/envs/bandit.hpp"
#include "lsp/envs/point_envs.hpp"

namespace lsp {

using nlohmann::json;

std::string sha256_hex(const std::string& data) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(out[i]);
  return os.str();
}

std::string ExperimentConfig::hash() const { return sha256_hex(source.dump()); }

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::size_t read_size(const json& obj, const char* key, const std::string& where, std::size_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  return static_cast<std::size_t>(it->get<std::int64_t>());
}

TrainerConfig parse_trainer(const json& t, const std::string& where, TrainerConfig cfg) {
  reject_unknown(t, where,
                 {"reward_scale", "discount", "target_smoothing", "batch_size", "steps_per_epoch",
                  "min_pool_size", "max_path_length", "total_epochs", "pool_capacity",
                  "learning_rate", "hidden_units"});
  read(t, "reward_scale", where, cfg.reward_scale);
  read(t, "discount", where, cfg.discount);
  read(t, "target_smoothing", where, cfg.target_smoothing);
  read(t, "learning_rate", where, cfg.learning_rate);
  cfg.batch_size = read_size(t, "batch_size", where, cfg.batch_size);
  cfg.steps_per_epoch = read_size(t, "steps_per_epoch", where, cfg.steps_per_epoch);
  cfg.min_pool_size = read_size(t, "min_pool_size", where, cfg.min_pool_size);
  cfg.max_path_length = read_size(t, "max_path_length", where, cfg.max_path_length);
  cfg.total_epochs = read_size(t, "total_epochs", where, cfg.total_epochs);
  cfg.pool_capacity = read_size(t, "pool_capacity", where, cfg.pool_capacity);
  cfg.hidden_units = read_size(t, "hidden_units", where, cfg.hidden_units);
  return cfg;
}

LayerSpec parse_layer(const json& l, const std::string& where, const ExperimentConfig& exp,
                      std::size_t index) {
  reject_unknown(l, where,
                 {"reward", "prior", "latent_mode", "latent_hold", "action_repeat",
                  "pretraining_env", "flow", "trainer"});
  LayerSpec spec;
  if (!l.contains("reward")) throw ConfigError(where + ": missing key 'reward'");
  read(l, "reward", where, spec.trainer.reward_channel);
  std::string name;
  try {
    name = index == 0 ? "uniform" : "gaussian";
    read(l, "prior", where, name);
    spec.trainer.action_prior = parse_action_prior(name);
    name = "per_step";
    read(l, "latent_mode", where, name);
    spec.trainer.latent_mode = parse_latent_mode(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  spec.trainer.latent_hold = read_size(l, "latent_hold", where, 1);
  spec.action_repeat = read_size(l, "action_repeat", where, 1);
  read(l, "pretraining_env", where, spec.pretraining_env);
  if (auto it = l.find("flow"); it != l.end()) {
    const std::string fw = where + ".flow";
    reject_unknown(*it, fw, {"coupling_layers", "embed_hidden", "scale_bound"});
    spec.flow.coupling_layers = read_size(*it, "coupling_layers", fw, spec.flow.coupling_layers);
    spec.flow.embed_hidden = read_size(*it, "embed_hidden", fw, spec.flow.embed_hidden);
    read(*it, "scale_bound", fw, spec.flow.scale_bound);
  }
  if (auto it = l.find("trainer"); it != l.end())
    spec.trainer = parse_trainer(*it, where + ".trainer", spec.trainer);
  spec.trainer.seed = exp.seed + 1000003ULL * index;
  spec.trainer.eval_rollouts = exp.eval_rollouts;
  try {
    spec.trainer.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return spec;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  reject_unknown(doc, "config", {"env", "layers", "seed", "output_dir", "eval_rollouts", "log_wall_clock"});
  ExperimentConfig cfg;
  cfg.source = doc;
  if (!doc.contains("env")) throw ConfigError("config: missing key 'env'");
  const json& env = doc["env"];
  reject_unknown(env, "config.env", {"name", "params"});
  if (!env.contains("name")) throw ConfigError("config.env: missing key 'name'");
  read(env, "name", "config.env", cfg.env.name);
  if (env.contains("params")) {
    if (!env["params"].is_object()) throw ConfigError("config.env.params: expected an object");
    cfg.env.params = env["params"];
  }
  read(doc, "seed", "config", cfg.seed);
  read(doc, "output_dir", "config", cfg.output_dir);
  cfg.eval_rollouts = read_size(doc, "eval_rollouts", "config", cfg.eval_rollouts);
  read(doc, "log_wall_clock", "config", cfg.log_wall_clock);
  if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty())
    throw ConfigError("config: 'layers' must be a non-empty array");
  for (std::size_t i = 0; i < doc["layers"].size(); ++i)
    cfg.layers.push_back(
        parse_layer(doc["layers"][i], "config.layers[" + std::to_string(i) + "]", cfg, i));
  make_environment(cfg.env);  // validates name and params early
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

std::unique_ptr<Environment> make_environment(const EnvConfig& cfg) {
  const std::string where = "config.env.params";
  const json& p = cfg.params;
  try {
    if (cfg.name == "point_maze" || cfg.name == "point_mass") {
      if (cfg.name == "point_maze")
        reject_unknown(p, where, {"goal", "max_episode_steps", "dt", "friction", "v_max", "action_bound"});
      else
        reject_unknown(p, where, {"max_episode_steps", "dt", "friction", "v_max", "action_bound"});
      PointMassParams pm;
      pm.max_episode_steps = read_size(p, "max_episode_steps", where, pm.max_episode_steps);
      read(p, "dt", where, pm.dt);
      read(p, "friction", where, pm.friction);
      read(p, "v_max", where, pm.v_max);
      read(p, "action_bound", where, pm.action_bound);
      if (cfg.name == "point_mass") return PointMassEnv::open_arena(pm);
      return PointMassEnv::maze(read_size(p, "goal", where, 0), pm);
    }
    if (cfg.name == "quadratic_bandit") {
      reject_unknown(p, where, {"k", "target"});
      double k = 0.5;
      Vec target{1.0, -1.0};
      read(p, "k", where, k);
      read(p, "target", where, target);
      return std::make_unique<QuadraticBandit>(k, target);
    }
  } catch (const EnvError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError("config.env.name: unknown environment '" + cfg.name +
                    "' (expected point_maze, point_mass or quadratic_bandit)");
}

}  // namespace lsp
