#include "lsp/core/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lsp/core/kernels.hpp"

namespace lsp {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const Parameter& p, bool trainable) {
  Node n;
  n.value = p.value;
  n.requires_grad = trainable;
  n.param = trainable ? &p : nullptr;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [&](std::size_t i) { return nodes_[i].requires_grad; });
  if (n.requires_grad) {
    n.inputs = std::move(inputs);
    n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::run_backward(const Var& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss belongs to another tape");
  if (value(loss.id()).size() != 1)
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     shape_str(value(loss.id()).shape()));
  for (auto& n : nodes_) n.grad = Tensor();
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id()).fill(1.0);
  // Node ids are a topological order; each reached node is visited once.
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

Gradients Tape::backward(const Var& loss) {
  run_backward(loss);
  Gradients out;
  for (auto& n : nodes_) {
    if (!n.param) continue;
    auto [it, inserted] = out.try_emplace(n.param, n.param->value.shape(), 0.0);
    if (n.grad.empty()) continue;
    double* dst = it->second.data();
    const double* src = n.grad.data();
    for (std::size_t j = 0; j < n.grad.size(); ++j) dst[j] += src[j];
  }
  return out;
}

std::vector<Tensor> Tape::backward_to(const Var& loss, const std::vector<Var>& wrt) {
  for (const auto& v : wrt)
    if (!nodes_[v.id()].requires_grad)
      throw std::invalid_argument("backward_to: targets must be recorded with Tape::variable");
  run_backward(loss);
  std::vector<Tensor> out;
  for (const auto& v : wrt) {
    const Node& n = nodes_[v.id()];
    out.push_back(n.grad.empty() ? Tensor(n.value.shape(), 0.0) : n.grad);
  }
  return out;
}

namespace ad {
namespace {

void same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape() || !a.valid()) throw std::invalid_argument("operands on different tapes");
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

/// Resolves trailing-dimension broadcasting; returns the result shape.
Shape broadcast_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (is_suffix(b.shape(), a.shape())) return a.shape();
  if (is_suffix(a.shape(), b.shape())) return b.shape();
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

/// Accumulates `g` (result-shaped) into the buffer of `id`, summing over broadcast reps.
void accumulate_reduced(Tape& t, std::size_t id, const Tensor& g) {
  if (!t.requires_grad(id)) return;
  Tensor& dst = t.grad_buffer(id);
  const std::size_t n = dst.size();
  const double* src = g.data();
  double* d = dst.data();
  for (std::size_t j = 0; j < g.size(); ++j) d[j % n] += src[j];
}

template <typename F>
Var unary(const Var& x, F f, Tape::BackwardFn bw) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape(), 0.0);
  for (std::size_t j = 0; j < xv.size(); ++j) out[j] = f(xv[j]);
  return x.tape()->record(std::move(out), {x.id()}, std::move(bw));
}

}  // namespace

Var add(const Var& a, const Var& b) {
  same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Shape shape = broadcast_shape("add", av, bv);
  const Tensor& big = av.size() >= bv.size() ? av : bv;
  const Tensor& small = av.size() >= bv.size() ? bv : av;
  Tensor out = big;
  const std::size_t n = small.size();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += small[j % n];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    accumulate_reduced(t, ia, g);
    accumulate_reduced(t, ib, g);
  });
}

Var sub(const Var& a, const Var& b) { return add(a, neg(b)); }

Var mul(const Var& a, const Var& b) {
  same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  broadcast_shape("mul", av, bv);
  const bool a_big = av.size() >= bv.size();
  const Tensor& big = a_big ? av : bv;
  const Tensor& small = a_big ? bv : av;
  Tensor out = big;
  const std::size_t n = small.size();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] *= small[j % n];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    const std::size_t nx = x.size(), ny = y.size();
    if (t.requires_grad(ia)) {
      Tensor& d = t.grad_buffer(ia);
      for (std::size_t j = 0; j < g.size(); ++j) d[j % nx] += g[j] * y[j % ny];
    }
    if (t.requires_grad(ib)) {
      Tensor& d = t.grad_buffer(ib);
      for (std::size_t j = 0; j < g.size(); ++j) d[j % ny] += g[j] * x[j % nx];
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0])
    throw ShapeError("matmul: incompatible shapes " + shape_str(av.shape()) + " and " +
                     shape_str(bv.shape()));
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  Tensor out(Shape{m, n}, 0.0);
  kernels::matmul(av.data(), bv.data(), out.data(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia))
      kernels::matmul_bt_acc(g.data(), t.value(ib).data(), t.grad_buffer(ia).data(), m, k, n);
    if (t.requires_grad(ib))
      kernels::matmul_at_acc(t.value(ia).data(), g.data(), t.grad_buffer(ib).data(), m, k, n);
  });
}

Var exp(const Var& x) {
  const std::size_t ix = x.id();
  return unary(x, [](double v) { return std::exp(v); }, [ix](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < g.size(); ++j) d[j] += g[j] * y[j];
  });
}

Var log(const Var& x) {
  for (double v : x.value().values())
    if (!(v > 0.0)) throw std::domain_error("log: non-positive input " + std::to_string(v));
  const std::size_t ix = x.id();
  return unary(x, [](double v) { return std::log(v); }, [ix](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < g.size(); ++j) d[j] += g[j] / xv[j];
  });
}

Var tanh(const Var& x) {
  const std::size_t ix = x.id();
  return unary(x, [](double v) { return std::tanh(v); }, [ix](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < g.size(); ++j) d[j] += g[j] * (1.0 - y[j] * y[j]);
  });
}

Var relu(const Var& x) {
  const std::size_t ix = x.id();
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [ix](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < g.size(); ++j)
      if (xv[j] > 0.0) d[j] += g[j];
  });
}

Var scale(const Var& x, double c) {
  const std::size_t ix = x.id();
  return unary(x, [c](double v) { return c * v; }, [ix, c](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < g.size(); ++j) d[j] += c * g[j];
  });
}

Var neg(const Var& x) { return scale(x, -1.0); }

Var add_scalar(const Var& x, double c) {
  const std::size_t ix = x.id();
  return unary(x, [c](double v) { return v + c; }, [ix](Tape& t, std::size_t self) {
    accumulate_reduced(t, ix, t.grad(self));
  });
}

Var square(const Var& x) {
  const std::size_t ix = x.id();
  return unary(x, [](double v) { return v * v; }, [ix](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < g.size(); ++j) d[j] += 2.0 * xv[j] * g[j];
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t ix = x.id();
  return x.tape()->record(Tensor::scalar(s), {ix}, [ix](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const double g = t.grad(self)[0];
    for (double& d : t.grad_buffer(ix).values()) d += g;
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var row_sum(const Var& x) {
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  Shape shape(xv.shape().begin(), xv.shape().end() - (xv.rank() ? 1 : 0));
  Tensor out(shape, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += xv[r * cols + c];
    out[r] = s;
  }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {ix}, [ix, rows, cols](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += g[r];
  });
}

Var concat_last(const Var& a, const Var& b) {
  same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != bv.rank() || av.rank() == 0 ||
      !std::equal(av.shape().begin(), av.shape().end() - 1, bv.shape().begin()))
    throw ShapeError("concat_last: incompatible shapes " + shape_str(av.shape()) + " and " +
                     shape_str(bv.shape()));
  const std::size_t rows = av.rows(), p = av.cols(), q = bv.cols();
  Shape shape = av.shape();
  shape.back() = p + q;
  Tensor out(shape, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * p, p, out.data() + r * (p + q));
    std::copy_n(bv.data() + r * q, q, out.data() + r * (p + q) + p);
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib, rows, p, q](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& d = t.grad_buffer(ia);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < p; ++c) d[r * p + c] += g[r * (p + q) + c];
    }
    if (t.requires_grad(ib)) {
      Tensor& d = t.grad_buffer(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < q; ++c) d[r * q + c] += g[r * (p + q) + p + c];
    }
  });
}

Var select_cols(const Var& x, const std::vector<std::size_t>& idx) {
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  for (auto i : idx)
    if (i >= cols)
      throw ShapeError("select_cols: index " + std::to_string(i) + " out of range for shape " +
                       shape_str(xv.shape()));
  if (idx.empty()) throw ShapeError("select_cols: empty selection");
  Shape shape = xv.rank() ? xv.shape() : Shape{1};
  shape.back() = idx.size();
  Tensor out(shape, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) out[r * idx.size() + c] = xv[r * cols + idx[c]];
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {ix}, [ix, idx, rows, cols](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < idx.size(); ++c) d[r * cols + idx[c]] += g[r * idx.size() + c];
  });
}

Var scatter_cols(const Var& x, const std::vector<std::size_t>& idx, std::size_t width) {
  const Tensor& xv = x.value();
  if (xv.cols() != idx.size())
    throw ShapeError("scatter_cols: " + std::to_string(idx.size()) + " indices for shape " +
                     shape_str(xv.shape()));
  const std::size_t rows = xv.rows(), k = idx.size();
  Shape shape = xv.shape();
  shape.back() = width;
  Tensor out(shape, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      if (idx[c] >= width) throw ShapeError("scatter_cols: index out of range");
      out[r * width + idx[c]] = xv[r * k + c];
    }
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {ix}, [ix, idx, rows, k, width](Tape& t, std::size_t self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < k; ++c) d[r * k + c] += g[r * width + idx[c]];
  });
}

Var detach(const Var& x) { return x.tape()->constant(x.value()); }

}  // namespace ad
}  // namespace lsp
