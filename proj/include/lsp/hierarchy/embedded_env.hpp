#pragma once

#include <memory>

#include "lsp/envs/environment.hpp"
#include "lsp/flow/flow_policy.hpp"

namespace lsp {

/// An environment with a frozen policy layer folded into its dynamics: the
/// exposed action is that layer's latent, and stepping with latent h applies
/// the inner action f(h; s). Each latent is held for `latent_hold` inner
/// steps (rewards summed, stopping early on a terminal step).
class EmbeddedEnvironment final : public Environment {
public:
  EmbeddedEnvironment(std::unique_ptr<Environment> inner,
                      std::shared_ptr<const FlowPolicy> frozen, std::size_t latent_hold = 1);
  EmbeddedEnvironment(const EmbeddedEnvironment& other);

  const EnvSpec& spec() const override { return spec_; }
  Vec reset(Rng& rng) override;
  StepResult step(std::span<const double> latent) override;
  std::unique_ptr<Environment> clone() const override;
  std::string name() const override;

  const Environment& inner() const { return *inner_; }
  const FlowPolicy& frozen_layer() const { return *frozen_; }
  std::size_t latent_hold() const { return hold_; }
  /// Steps taken in the innermost (physical) environment since construction.
  std::size_t base_steps() const;

private:
  std::unique_ptr<Environment> inner_;
  std::shared_ptr<const FlowPolicy> frozen_;
  std::size_t hold_;
  EnvSpec spec_;
  Vec obs_;
  std::size_t own_inner_steps_ = 0;
};

/// Wraps `env` so that `trained` becomes part of its dynamics.
std::unique_ptr<EmbeddedEnvironment> embed_layer(std::unique_ptr<Environment> env,
                                                 std::shared_ptr<const FlowPolicy> trained,
                                                 std::size_t latent_hold = 1);

}  // namespace lsp
