#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lsp/core/autodiff.hpp"

namespace lsp {

struct AdamState {
  std::size_t step_count = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zeroed moments shaped like `params`.
  static AdamState for_params(std::span<Parameter* const> params, double learning_rate = 3e-4);
};

/// One bias-corrected Adam update. A parameter missing from `grads` is
/// treated as having a zero gradient.
void adam_step(std::span<Parameter* const> params, const Gradients& grads, AdamState& state);

}  // namespace lsp
