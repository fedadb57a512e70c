#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lsp/core/autodiff.hpp"
#include "lsp/core/rng.hpp"

namespace lsp::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(shape);
  for (double& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

// |a - b| / max(|a|, |b|, floor): relative error that tolerates values near zero.
inline double rel_err(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Worst relative error between backward_to and central differences for every
// entry of every input.
inline double gradient_check(const ScalarFn& fn, std::vector<Tensor> inputs, double step = 1e-5) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  const auto analytic = tape.backward_to(fn(tape, vars), vars);

  auto eval = [&](const std::vector<Tensor>& xs) {
    Tape t;
    std::vector<Var> vs;
    for (const auto& x : xs) vs.push_back(t.constant(x));
    return fn(t, vs).value().item();
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double saved = inputs[i][j];
      inputs[i][j] = saved + step;
      const double up = eval(inputs);
      inputs[i][j] = saved - step;
      const double down = eval(inputs);
      inputs[i][j] = saved;
      worst = std::max(worst, rel_err(analytic[i][j], (up - down) / (2 * step)));
    }
  return worst;
}

// Same check for parameters reached through Tape::param.
inline double parameter_gradient_check(const std::function<Var(Tape&)>& loss_fn,
                                       const std::vector<Parameter*>& params,
                                       double step = 1e-5) {
  Tape tape;
  const Gradients grads = tape.backward(loss_fn(tape));
  auto eval = [&] {
    Tape t;
    return loss_fn(t).value().item();
  };
  double worst = 0.0;
  for (Parameter* p : params) {
    const Tensor& g = grads.at(p);
    for (std::size_t j = 0; j < p->value.size(); ++j) {
      const double saved = p->value[j];
      p->value[j] = saved + step;
      const double up = eval();
      p->value[j] = saved - step;
      const double down = eval();
      p->value[j] = saved;
      worst = std::max(worst, rel_err(g[j], (up - down) / (2 * step)));
    }
  }
  return worst;
}

}  // namespace lsp::testing

#include "lsp/flow/flow_policy.hpp"

namespace lsp::testing {

// A flow whose every weight, including the zero-initialised output layers,
// is moved off its initial value.
inline FlowPolicy perturbed_flow(const FlowConfig& cfg, Rng& rng, double spread = 0.3) {
  FlowPolicy policy(cfg, rng);
  for (Parameter* p : policy.parameters())
    for (double& w : p->value.storage()) w += rng.uniform(-spread, spread);
  return policy;
}

inline std::vector<double> normal_vec(std::size_t n, Rng& rng, double sd = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = sd * rng.normal();
  return v;
}

}  // namespace lsp::testing

namespace lsp::testing {

struct KinkAwareResult {
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t refined = 0;  // coordinates whose stencil straddled a ReLU kink
};

// Central differences that shrink the step while estimates at h and h/10
// disagree, i.e. while the stencil straddles a kink. On smooth coordinates the
// two agree to O(h^2) and the base step is kept.
inline void kink_aware_parameter_check(const std::function<Var(Tape&)>& loss_fn,
                                       const std::vector<Parameter*>& params, KinkAwareResult& out,
                                       double step = 1e-5) {
  Tape tape;
  const Gradients grads = tape.backward(loss_fn(tape));
  auto eval = [&] {
    Tape t;
    return loss_fn(t).value().item();
  };
  for (Parameter* p : params) {
    const Tensor& g = grads.at(p);
    for (std::size_t j = 0; j < p->value.size(); ++j) {
      const double saved = p->value[j];
      auto central = [&](double h) {
        p->value[j] = saved + h;
        const double up = eval();
        p->value[j] = saved - h;
        const double down = eval();
        p->value[j] = saved;
        return (up - down) / (2 * h);
      };
      double h = step, fd = central(h);
      for (int attempt = 0; attempt < 3; ++attempt) {
        const double finer = central(h / 10);
        if (rel_err(fd, finer) < 1e-5) break;
        if (attempt == 0) ++out.refined;
        h /= 10;
        fd = finer;
      }
      ++out.checked;
      out.worst = std::max(out.worst, rel_err(g[j], fd));
    }
  }
}

}  // namespace lsp::testing
