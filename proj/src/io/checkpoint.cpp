#include "lsp/io/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <map>

namespace lsp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kLayerFormat = "lsp-layer-checkpoint/1";
constexpr const char* kStackFormat = "lsp-stack-checkpoint/1";

const json& field(const json& doc, const std::string& key, const std::string& where) {
  if (!doc.is_object() || !doc.contains(key))
    throw CheckpointError(where + ": missing field '" + key + "'");
  return doc.at(key);
}

template <typename T>
T get(const json& doc, const std::string& key, const std::string& where) {
  try {
    return field(doc, key, where).get<T>();
  } catch (const json::exception& e) {
    throw CheckpointError(where + ": bad field '" + key + "': " + e.what());
  }
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out << doc.dump(1) << '\n';
  if (!out) throw CheckpointError("write failed for '" + path + "'");
}

json metadata(const StackLayer& l) {
  return {{"reward", l.reward},
          {"prior", to_string(l.prior)},
          {"latent_mode", to_string(l.latent_mode)},
          {"latent_hold", l.latent_hold},
          {"action_repeat", l.action_repeat},
          {"pretraining_env", l.pretraining_env}};
}

}  // namespace

json checkpoint_to_json(const StackLayer& layer, const std::string& config_hash) {
  const FlowPolicy& p = *layer.policy;
  const FlowConfig& fc = p.config();
  json params = json::object();
  for (const Parameter* prm : p.parameters())
    params[prm->name] = {{"shape", prm->value.shape()}, {"data", prm->value.storage()}};
  return {{"format", kLayerFormat},
          {"config_hash", config_hash},
          {"topology",
           {{"obs_dim", fc.obs_dim},
            {"action_dim", fc.action_dim},
            {"coupling_layers", fc.coupling_layers},
            {"embed_hidden", fc.embed_hidden},
            {"scale_bound", fc.scale_bound}}},
          {"metadata", metadata(layer)},
          {"parameters", params}};
}

StackLayer checkpoint_from_json(const json& doc, std::optional<std::size_t> expected_action_dim,
                                std::optional<std::size_t> expected_obs_dim) {
  const std::string where = "checkpoint";
  if (get<std::string>(doc, "format", where) != kLayerFormat)
    throw CheckpointError(where + ": unsupported format '" + doc["format"].get<std::string>() + "'");
  const json& topo = field(doc, "topology", where);
  FlowConfig fc;
  fc.obs_dim = get<std::size_t>(topo, "obs_dim", "checkpoint.topology");
  fc.action_dim = get<std::size_t>(topo, "action_dim", "checkpoint.topology");
  fc.coupling_layers = get<std::size_t>(topo, "coupling_layers", "checkpoint.topology");
  fc.embed_hidden = get<std::size_t>(topo, "embed_hidden", "checkpoint.topology");
  fc.scale_bound = get<double>(topo, "scale_bound", "checkpoint.topology");
  if (expected_action_dim && *expected_action_dim != fc.action_dim)
    throw CheckpointError("checkpoint: action_dim " + std::to_string(fc.action_dim) +
                          " does not match the expected " + std::to_string(*expected_action_dim));
  if (expected_obs_dim && *expected_obs_dim != fc.obs_dim)
    throw CheckpointError("checkpoint: obs_dim " + std::to_string(fc.obs_dim) +
                          " does not match the expected " + std::to_string(*expected_obs_dim));

  Rng unused(0);
  FlowPolicy policy(fc, unused);
  const json& params = field(doc, "parameters", where);
  for (Parameter* prm : policy.parameters()) {
    const std::string pw = "checkpoint.parameters." + prm->name;
    const json& entry = field(params, prm->name, "checkpoint.parameters");
    const auto shape = get<Shape>(entry, "shape", pw);
    auto data = get<std::vector<double>>(entry, "data", pw);
    if (shape != prm->value.shape())
      throw CheckpointError(pw + ": shape " + shape_str(shape) + " does not match topology " +
                            shape_str(prm->value.shape()));
    if (data.size() != prm->value.size())
      throw CheckpointError(pw + ": expected " + std::to_string(prm->value.size()) + " values");
    prm->value.storage() = std::move(data);
  }
  if (params.size() != policy.parameters().size())
    throw CheckpointError("checkpoint.parameters: unexpected extra arrays");

  const json& meta = field(doc, "metadata", where);
  StackLayer layer;
  try {
    layer.reward = get<std::string>(meta, "reward", "checkpoint.metadata");
    layer.prior = parse_action_prior(get<std::string>(meta, "prior", "checkpoint.metadata"));
    layer.latent_mode = parse_latent_mode(get<std::string>(meta, "latent_mode", "checkpoint.metadata"));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint.metadata: ") + e.what());
  }
  layer.latent_hold = get<std::size_t>(meta, "latent_hold", "checkpoint.metadata");
  layer.action_repeat = get<std::size_t>(meta, "action_repeat", "checkpoint.metadata");
  layer.pretraining_env = get<bool>(meta, "pretraining_env", "checkpoint.metadata");
  layer.policy = std::make_shared<const FlowPolicy>(std::move(policy));
  return layer;
}

void save_checkpoint(const std::string& path, const StackLayer& layer,
                     const std::string& config_hash) {
  write_json(path, checkpoint_to_json(layer, config_hash));
}

StackLayer load_checkpoint(const std::string& path, std::optional<std::size_t> expected_action_dim,
                           std::optional<std::size_t> expected_obs_dim) {
  return checkpoint_from_json(read_json(path), expected_action_dim, expected_obs_dim);
}

std::string checkpoint_config_hash(const std::string& path) {
  return get<std::string>(read_json(path), "config_hash", "checkpoint");
}

void save_stack(const std::string& dir, const LayerStack& stack, const std::string& config_hash) {
  fs::create_directories(dir);
  json files = json::array();
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    const std::string name = "layer_" + std::to_string(i) + ".json";
    save_checkpoint((fs::path(dir) / name).string(), stack.layers[i], config_hash);
    files.push_back({{"file", name}, {"metadata", metadata(stack.layers[i])}});
  }
  write_json((fs::path(dir) / "stack.json").string(),
             {{"format", kStackFormat}, {"config_hash", config_hash}, {"layers", files}});
}

LayerStack load_stack(const std::string& path) {
  const json doc = read_json(path);
  LayerStack stack;
  const std::string format = get<std::string>(doc, "format", "checkpoint");
  if (format == kLayerFormat) {
    stack.layers.push_back(checkpoint_from_json(doc));
    return stack;
  }
  if (format != kStackFormat) throw CheckpointError("checkpoint: unsupported format '" + format + "'");
  const fs::path base = fs::path(path).parent_path();
  for (const auto& entry : field(doc, "layers", "stack")) {
    const auto file = get<std::string>(entry, "file", "stack.layers[]");
    stack.layers.push_back(load_checkpoint((base / file).string()));
  }
  stack.validate();
  return stack;
}

}  // namespace lsp
