#pragma once

#include "lsp/envs/environment.hpp"

namespace lsp {

/// One-step bandit with reward -k * |a - target|^2 on channel "task". The
/// observation is the constant [1]; every step is terminal.
class QuadraticBandit final : public Environment {
public:
  QuadraticBandit(double k, Vec target);

  const EnvSpec& spec() const override { return spec_; }
  Vec reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  std::unique_ptr<Environment> clone() const override;
  std::string name() const override { return "quadratic_bandit"; }

  double k() const { return k_; }
  const Vec& target() const { return target_; }

private:
  double k_;
  Vec target_;
  EnvSpec spec_;
};

}  // namespace lsp
