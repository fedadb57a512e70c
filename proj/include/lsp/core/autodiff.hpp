#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lsp/core/tensor.hpp"

namespace lsp {

/// Trainable array with a stable name, owned by a network.
struct Parameter {
  std::string name;
  Tensor value;
};

class Tape;

/// Handle to a value recorded on a tape.
class Var {
public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using Gradients = std::map<const Parameter*, Tensor>;

/// Append-only record of operations for reverse-mode differentiation. One tape
/// is built per training step and then discarded.
class Tape {
public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf for a parameter. With `trainable == false` the value participates
  /// in the computation but receives no gradient.
  Var param(const Parameter& p, bool trainable = true);
  /// Differentiable leaf that is not a parameter (see backward_to).
  Var variable(Tensor value);

  /// Reverse pass from a scalar. Every trainable parameter registered on this
  /// tape gets an entry, zero when it does not influence `loss`.
  Gradients backward(const Var& loss);

  /// Gradient of `loss` with respect to arbitrary recorded nodes (e.g. inputs).
  std::vector<Tensor> backward_to(const Var& loss, const std::vector<Var>& wrt);

  // Op-author interface.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of `id`, zero-initialised on first access.
  Tensor& grad_buffer(std::size_t id);
  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    const Parameter* param = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  void run_backward(const Var& loss);

  std::vector<Node> nodes_;
};

namespace ad {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var matmul(const Var& a, const Var& b);
Var exp(const Var& x);
Var log(const Var& x);
Var tanh(const Var& x);
Var relu(const Var& x);
Var neg(const Var& x);
Var scale(const Var& x, double c);
Var add_scalar(const Var& x, double c);
Var square(const Var& x);
/// Sum of all entries, as a scalar.
Var sum(const Var& x);
/// Mean of all entries, as a scalar.
Var mean(const Var& x);
/// Sum over the last axis: [.., n] -> [..].
Var row_sum(const Var& x);
Var concat_last(const Var& a, const Var& b);
/// Columns `idx` of the last axis.
Var select_cols(const Var& x, const std::vector<std::size_t>& idx);
/// Places the columns of `x` at positions `idx` of a zero array with `width` columns.
Var scatter_cols(const Var& x, const std::vector<std::size_t>& idx, std::size_t width);
/// Same value, cut from the gradient path.
Var detach(const Var& x);

}  // namespace ad

inline Var operator+(const Var& a, const Var& b) { return ad::add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return ad::sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return ad::mul(a, b); }
inline Var operator-(const Var& a) { return ad::neg(a); }

}  // namespace lsp
