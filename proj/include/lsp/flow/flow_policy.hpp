#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "lsp/core/autodiff.hpp"
#include "lsp/core/nn.hpp"
#include "lsp/core/rng.hpp"

namespace lsp {

using Vec = std::vector<double>;

/// Spherical unit Gaussian over the latent space.
struct LatentPrior {
  std::size_t dim = 0;

  double log_density(std::span<const double> h) const;
  Var log_density(const Var& h) const;  // [B, dim] -> [B]
  Vec sample(Rng& rng) const;
  /// Differential entropy, (dim/2)(1 + ln 2 pi).
  double entropy() const;
};

/// Result of pushing a point through a bijection: the image and ln|det J|.
struct Mapped {
  Vec value;
  double log_det = 0.0;
};

/// Tape-level result for a batch.
struct MappedBatch {
  Var value;    // [B, dim]
  Var log_det;  // [B]
};

struct PolicySample {
  Vec action;
  double log_prob = 0.0;
  Vec latent;
};

/// Policy whose action is a bijective, observation-conditioned image of a
/// latent drawn from a unit Gaussian prior.
class LatentPolicy {
public:
  virtual ~LatentPolicy() = default;

  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t action_dim() const = 0;

  virtual Mapped forward(std::span<const double> latent, std::span<const double> obs) const = 0;
  virtual Mapped inverse(std::span<const double> action, std::span<const double> obs) const = 0;

  LatentPrior prior() const { return LatentPrior{action_dim()}; }
  double log_prob(std::span<const double> action, std::span<const double> obs) const;
  PolicySample sample(std::span<const double> obs, Rng& rng) const;
  /// Sample with a caller-supplied latent (see latent schedules).
  PolicySample act(std::span<const double> latent, std::span<const double> obs) const;
};

/// Affine coupling transform conditioned on the observation embedding.
/// Coordinates in `pass_idx` go through unchanged; those in `transform_idx`
/// become x * exp(s) + t with s = bound * tanh(scale_net(.)).
class CouplingLayer {
public:
  CouplingLayer() = default;
  CouplingLayer(std::string name, std::size_t action_dim, std::size_t embed_dim,
                std::vector<std::size_t> pass_idx, std::vector<std::size_t> transform_idx,
                double scale_bound, Rng& rng);

  MappedBatch forward(Tape& tape, const Var& x, const Var& embedding, bool trainable) const;
  MappedBatch inverse(Tape& tape, const Var& y, const Var& embedding, bool trainable) const;

  const std::vector<std::size_t>& pass_indices() const { return pass_idx_; }
  const std::vector<std::size_t>& transform_indices() const { return transform_idx_; }
  Mlp& scale_net() { return scale_net_; }
  Mlp& translation_net() { return translation_net_; }
  const Mlp& scale_net() const { return scale_net_; }
  const Mlp& translation_net() const { return translation_net_; }

private:
  struct ScaleShift {
    Var log_scale;
    Var shift;
  };
  ScaleShift conditioner(Tape& tape, const Var& pass_part, const Var& embedding,
                         bool trainable) const;

  std::size_t action_dim_ = 0;
  std::vector<std::size_t> pass_idx_;
  std::vector<std::size_t> transform_idx_;
  double scale_bound_ = 5.0;
  Mlp scale_net_;
  Mlp translation_net_;
};

struct FlowConfig {
  std::size_t obs_dim = 1;
  std::size_t action_dim = 1;
  std::size_t coupling_layers = 2;
  std::size_t embed_hidden = 128;
  double scale_bound = 5.0;
};

/// Stack of coupling layers sharing one observation embedder. Layer l passes
/// the even action indices through when l is even and the odd ones otherwise;
/// a 1-dimensional action gets conditional affine layers instead.
class FlowPolicy final : public LatentPolicy {
public:
  FlowPolicy() = default;
  FlowPolicy(const FlowConfig& config, Rng& rng);

  std::size_t obs_dim() const override { return config_.obs_dim; }
  std::size_t action_dim() const override { return config_.action_dim; }
  const FlowConfig& config() const { return config_; }

  Mapped forward(std::span<const double> latent, std::span<const double> obs) const override;
  Mapped inverse(std::span<const double> action, std::span<const double> obs) const override;

  Var embed(Tape& tape, const Var& obs, bool trainable = true) const;
  MappedBatch forward(Tape& tape, const Var& latent, const Var& obs, bool trainable = true) const;
  MappedBatch inverse(Tape& tape, const Var& action, const Var& obs, bool trainable = true) const;
  using LatentPolicy::log_prob;
  /// ln pi(a|s) for a batch, differentiable in the parameters.
  Var log_prob(Tape& tape, const Var& action, const Var& obs, bool trainable = true) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  std::vector<CouplingLayer>& layers() { return layers_; }
  const std::vector<CouplingLayer>& layers() const { return layers_; }
  Mlp& embedder() { return embedder_; }

private:
  void check_inputs(std::span<const double> x, std::span<const double> obs) const;

  FlowConfig config_;
  Mlp embedder_;
  std::vector<CouplingLayer> layers_;
};

}  // namespace lsp
