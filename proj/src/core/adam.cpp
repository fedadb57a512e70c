#include "lsp/core/adam.hpp"

#include <cmath>

namespace lsp {

AdamState AdamState::for_params(std::span<Parameter* const> params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (const Parameter* p : params) {
    s.first_moment.emplace_back(p->value.shape(), 0.0);
    s.second_moment.emplace_back(p->value.shape(), 0.0);
  }
  return s;
}

void adam_step(std::span<Parameter* const> params, const Gradients& grads, AdamState& state) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw ShapeError("adam_step: optimizer state tracks " +
                     std::to_string(state.first_moment.size()) + " parameters, got " +
                     std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].shape() != params[i]->value.shape())
      throw ShapeError("adam_step: moment shape " + shape_str(state.first_moment[i].shape()) +
                       " does not match parameter '" + params[i]->name + "' of shape " +
                       shape_str(params[i]->value.shape()));
    auto it = grads.find(params[i]);
    if (it != grads.end() && it->second.shape() != params[i]->value.shape())
      throw ShapeError("adam_step: gradient shape " + shape_str(it->second.shape()) +
                       " does not match parameter '" + params[i]->name + "' of shape " +
                       shape_str(params[i]->value.shape()));
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = grads.find(params[i]);
    const double* g = it == grads.end() ? nullptr : it->second.data();
    double* p = params[i]->value.data();
    double* m = state.first_moment[i].data();
    double* v = state.second_moment[i].data();
    const std::size_t n = params[i]->value.size();
    for (std::size_t j = 0; j < n; ++j) {
      const double gj = g ? g[j] : 0.0;
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace lsp
