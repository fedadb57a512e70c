#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsp/envs/environment.hpp"
#include "lsp/hierarchy/layer_stack.hpp"

namespace lsp {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct EnvConfig {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

/// Whole-experiment description, read from a JSON document. Unknown keys are
/// rejected at every level.
struct ExperimentConfig {
  EnvConfig env;
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;
  std::string output_dir = "runs";
  std::size_t eval_rollouts = 10;
  /// Write elapsed seconds into metrics.csv; off keeps the file reproducible.
  bool log_wall_clock = false;
  /// Raw document as parsed, for snapshots and hashing.
  nlohmann::json source;

  /// SHA-256 (hex) of the canonical serialisation of `source`.
  std::string hash() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
/// Reads and parses a config file; errors name the line or the key.
ExperimentConfig load_config(const std::string& path);

/// Environment constructors addressable by name: "point_maze" (goal,
/// max_episode_steps, dt, friction, v_max, action_bound), "point_mass" (same
/// minus goal) and "quadratic_bandit" (k, target).
std::unique_ptr<Environment> make_environment(const EnvConfig& cfg);

std::string sha256_hex(const std::string& data);

}  // namespace lsp
