#include "lsp/flow/flow_policy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lsp {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Tensor row(std::span<const double> v) { return Tensor(Shape{1, v.size()}, Vec(v.begin(), v.end())); }
}  // namespace

// ---- LatentPrior ----------------------------------------------------------

double LatentPrior::log_density(std::span<const double> h) const {
  if (h.size() != dim)
    throw ShapeError("prior: latent has " + std::to_string(h.size()) + " components, expected " +
                     std::to_string(dim));
  double sq = 0.0;
  for (double v : h) sq += v * v;
  return -0.5 * static_cast<double>(dim) * kLog2Pi - 0.5 * sq;
}

Var LatentPrior::log_density(const Var& h) const {
  return ad::add_scalar(ad::scale(ad::row_sum(ad::square(h)), -0.5),
                        -0.5 * static_cast<double>(dim) * kLog2Pi);
}

Vec LatentPrior::sample(Rng& rng) const {
  Vec h(dim);
  for (double& v : h) v = rng.normal();
  return h;
}

double LatentPrior::entropy() const { return 0.5 * static_cast<double>(dim) * (1.0 + kLog2Pi); }

// ---- LatentPolicy ---------------------------------------------------------

double LatentPolicy::log_prob(std::span<const double> action, std::span<const double> obs) const {
  Mapped inv = inverse(action, obs);
  return prior().log_density(inv.value) + inv.log_det;
}

PolicySample LatentPolicy::sample(std::span<const double> obs, Rng& rng) const {
  Vec h = prior().sample(rng);
  return act(h, obs);
}

PolicySample LatentPolicy::act(std::span<const double> latent, std::span<const double> obs) const {
  Mapped fwd = forward(latent, obs);
  PolicySample s;
  s.log_prob = prior().log_density(latent) - fwd.log_det;
  s.action = std::move(fwd.value);
  s.latent.assign(latent.begin(), latent.end());
  return s;
}

// ---- CouplingLayer --------------------------------------------------------

CouplingLayer::CouplingLayer(std::string name, std::size_t action_dim, std::size_t embed_dim,
                             std::vector<std::size_t> pass_idx,
                             std::vector<std::size_t> transform_idx, double scale_bound,
                             Rng& rng)
    : action_dim_(action_dim),
      pass_idx_(std::move(pass_idx)),
      transform_idx_(std::move(transform_idx)),
      scale_bound_(scale_bound) {
  if (transform_idx_.empty()) throw std::invalid_argument("coupling layer transforms nothing");
  const std::size_t in = pass_idx_.size() + embed_dim;
  const std::size_t out = transform_idx_.size();
  scale_net_ = Mlp(name + ".scale", {in, action_dim, out}, rng, /*zero_output=*/true);
  translation_net_ = Mlp(name + ".translation", {in, action_dim, out}, rng, /*zero_output=*/true);
}

CouplingLayer::ScaleShift CouplingLayer::conditioner(Tape& tape, const Var& pass_part,
                                                     const Var& embedding, bool trainable) const {
  Var in = pass_part.valid() ? ad::concat_last(pass_part, embedding) : embedding;
  Var s = ad::scale(ad::tanh(scale_net_.forward(tape, in, trainable)), scale_bound_);
  Var t = translation_net_.forward(tape, in, trainable);
  return {s, t};
}

MappedBatch CouplingLayer::forward(Tape& tape, const Var& x, const Var& embedding,
                                   bool trainable) const {
  Var pass = pass_idx_.empty() ? Var() : ad::select_cols(x, pass_idx_);
  auto [s, t] = conditioner(tape, pass, embedding, trainable);
  Var moved = ad::add(ad::mul(ad::select_cols(x, transform_idx_), ad::exp(s)), t);
  Var y = ad::scatter_cols(moved, transform_idx_, action_dim_);
  if (pass.valid()) y = ad::add(y, ad::scatter_cols(pass, pass_idx_, action_dim_));
  return {y, ad::row_sum(s)};
}

MappedBatch CouplingLayer::inverse(Tape& tape, const Var& y, const Var& embedding,
                                   bool trainable) const {
  Var pass = pass_idx_.empty() ? Var() : ad::select_cols(y, pass_idx_);
  auto [s, t] = conditioner(tape, pass, embedding, trainable);
  Var moved = ad::mul(ad::sub(ad::select_cols(y, transform_idx_), t), ad::exp(ad::neg(s)));
  Var x = ad::scatter_cols(moved, transform_idx_, action_dim_);
  if (pass.valid()) x = ad::add(x, ad::scatter_cols(pass, pass_idx_, action_dim_));
  return {x, ad::neg(ad::row_sum(s))};
}

// ---- FlowPolicy -----------------------------------------------------------

FlowPolicy::FlowPolicy(const FlowConfig& config, Rng& rng) : config_(config) {
  if (config.obs_dim == 0 || config.action_dim == 0)
    throw std::invalid_argument("flow policy dimensions must be positive");
  if (config.coupling_layers == 0) throw std::invalid_argument("flow policy needs a coupling layer");
  const std::size_t d = config.action_dim;
  const std::size_t embed_dim = 2 * d;
  embedder_ = Mlp("embed", {config.obs_dim, config.embed_hidden, config.embed_hidden, embed_dim},
                  rng);
  for (std::size_t l = 0; l < config.coupling_layers; ++l) {
    std::vector<std::size_t> pass, moved;
    if (d == 1) {
      moved = {0};
    } else {
      for (std::size_t i = 0; i < d; ++i) ((i % 2 == l % 2) ? pass : moved).push_back(i);
    }
    layers_.emplace_back("coupling" + std::to_string(l), d, embed_dim, std::move(pass),
                         std::move(moved), config.scale_bound, rng);
  }
}

void FlowPolicy::check_inputs(std::span<const double> x, std::span<const double> obs) const {
  if (x.size() != config_.action_dim)
    throw ShapeError("flow policy: expected " + std::to_string(config_.action_dim) +
                     " action/latent components, got " + std::to_string(x.size()));
  if (obs.size() != config_.obs_dim)
    throw ShapeError("flow policy: expected observation of size " +
                     std::to_string(config_.obs_dim) + ", got " + std::to_string(obs.size()));
  for (double v : x)
    if (!std::isfinite(v)) throw std::domain_error("flow policy: non-finite latent/action");
  for (double v : obs)
    if (!std::isfinite(v)) throw std::domain_error("flow policy: non-finite observation");
}

Var FlowPolicy::embed(Tape& tape, const Var& obs, bool trainable) const {
  return embedder_.forward(tape, obs, trainable);
}

MappedBatch FlowPolicy::forward(Tape& tape, const Var& latent, const Var& obs,
                                bool trainable) const {
  Var emb = embed(tape, obs, trainable);
  Var x = latent;
  Var log_det;
  for (const auto& layer : layers_) {
    MappedBatch m = layer.forward(tape, x, emb, trainable);
    x = m.value;
    log_det = log_det.valid() ? ad::add(log_det, m.log_det) : m.log_det;
  }
  return {x, log_det};
}

MappedBatch FlowPolicy::inverse(Tape& tape, const Var& action, const Var& obs,
                                bool trainable) const {
  Var emb = embed(tape, obs, trainable);
  Var x = action;
  Var log_det;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    MappedBatch m = it->inverse(tape, x, emb, trainable);
    x = m.value;
    log_det = log_det.valid() ? ad::add(log_det, m.log_det) : m.log_det;
  }
  return {x, log_det};
}

Var FlowPolicy::log_prob(Tape& tape, const Var& action, const Var& obs, bool trainable) const {
  MappedBatch inv = inverse(tape, action, obs, trainable);
  return ad::add(prior().log_density(inv.value), inv.log_det);
}

Mapped FlowPolicy::forward(std::span<const double> latent, std::span<const double> obs) const {
  check_inputs(latent, obs);
  Tape tape;
  MappedBatch m = forward(tape, tape.constant(row(latent)), tape.constant(row(obs)), false);
  return {m.value.value().storage(), m.log_det.value()[0]};
}

Mapped FlowPolicy::inverse(std::span<const double> action, std::span<const double> obs) const {
  check_inputs(action, obs);
  Tape tape;
  MappedBatch m = inverse(tape, tape.constant(row(action)), tape.constant(row(obs)), false);
  return {m.value.value().storage(), m.log_det.value()[0]};
}

std::vector<Parameter*> FlowPolicy::parameters() {
  std::vector<Parameter*> out = embedder_.parameters();
  for (auto& l : layers_) {
    for (Parameter* p : l.scale_net().parameters()) out.push_back(p);
    for (Parameter* p : l.translation_net().parameters()) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> FlowPolicy::parameters() const {
  std::vector<const Parameter*> out = embedder_.parameters();
  for (const auto& l : layers_) {
    for (const Parameter* p : l.scale_net().parameters()) out.push_back(p);
    for (const Parameter* p : l.translation_net().parameters()) out.push_back(p);
  }
  return out;
}

}  // namespace lsp
