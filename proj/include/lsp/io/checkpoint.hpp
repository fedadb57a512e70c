#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "lsp/flow/flow_policy.hpp"
#include "lsp/hierarchy/layer_stack.hpp"

namespace lsp {

class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// JSON document: topology, config hash, layer metadata and every named
/// parameter array at round-trip precision.
nlohmann::json checkpoint_to_json(const StackLayer& layer, const std::string& config_hash);
StackLayer checkpoint_from_json(const nlohmann::json& doc,
                                std::optional<std::size_t> expected_action_dim = std::nullopt,
                                std::optional<std::size_t> expected_obs_dim = std::nullopt);

void save_checkpoint(const std::string& path, const StackLayer& layer,
                     const std::string& config_hash);
StackLayer load_checkpoint(const std::string& path,
                           std::optional<std::size_t> expected_action_dim = std::nullopt,
                           std::optional<std::size_t> expected_obs_dim = std::nullopt);
/// Config hash recorded in a layer or stack checkpoint.
std::string checkpoint_config_hash(const std::string& path);

/// Writes `dir/layer_<i>.json` for every layer and `dir/stack.json` listing them.
void save_stack(const std::string& dir, const LayerStack& stack, const std::string& config_hash);
/// Accepts either a stack.json or a single-layer checkpoint.
LayerStack load_stack(const std::string& path);

}  // namespace lsp
