#pragma once

#include <string>
#include <vector>

#include "lsp/core/autodiff.hpp"
#include "lsp/core/rng.hpp"

namespace lsp {

/// Fully-connected layer y = x W + b with W stored [in, out].
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(std::string name, std::size_t in, std::size_t out, Rng& rng, bool zero_init = false);

  std::size_t in_dim() const { return weight.value.shape()[0]; }
  std::size_t out_dim() const { return weight.value.shape()[1]; }
  Var forward(Tape& tape, const Var& x, bool trainable = true) const;
};

/// ReLU multilayer perceptron with a linear output layer.
class Mlp {
public:
  Mlp() = default;
  /// `sizes` = {in, hidden..., out}. Hidden layers draw weights and biases
  /// from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); `zero_output` zeroes the last layer.
  Mlp(std::string name, const std::vector<std::size_t>& sizes, Rng& rng, bool zero_output = false);

  Var forward(Tape& tape, const Var& x, bool trainable = true) const;
  /// Batch forward outside any training tape.
  Tensor evaluate(const Tensor& x) const;

  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

private:
  std::vector<Linear> layers_;
};

}  // namespace lsp

namespace lsp {

/// SHA-256 (hex) over parameter names, shapes and raw value bytes.
std::string parameter_digest(const std::vector<const Parameter*>& params);

}  // namespace lsp
