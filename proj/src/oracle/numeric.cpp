#include "lsp/oracle/oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lsp::oracle {

Matrix numeric_jacobian(const Map& map, std::span<const double> point, double step) {
  Vec x(point.begin(), point.end());
  const Vec f0 = map(x);
  Matrix jac(f0.size(), Vec(x.size(), 0.0));
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double orig = x[j];
    x[j] = orig + step;
    const Vec fp = map(x);
    x[j] = orig - step;
    const Vec fm = map(x);
    x[j] = orig;
    if (fp.size() != f0.size() || fm.size() != f0.size())
      throw std::invalid_argument("numeric_jacobian: map changed output size");
    for (std::size_t i = 0; i < f0.size(); ++i) {
      if (!std::isfinite(fp[i]) || !std::isfinite(fm[i]))
        throw std::domain_error("numeric_jacobian: non-finite evaluation");
      jac[i][j] = (fp[i] - fm[i]) / (2.0 * step);
    }
  }
  return jac;
}

Matrix numeric_jacobian(const ConditionalMap& map, std::span<const double> point,
                        std::span<const double> obs, double step) {
  Vec o(obs.begin(), obs.end());
  return numeric_jacobian([&](std::span<const double> x) { return map(x, o); }, point, step);
}

double log_abs_det(const Matrix& m) {
  const std::size_t n = m.size();
  Matrix a = m;
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (a[c].size() != n) throw std::invalid_argument("log_abs_det: matrix is not square");
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) return -INFINITY;
    std::swap(a[piv], a[c]);
    acc += std::log(std::abs(a[c][c]));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return acc;
}

double grid_integrate_density(const LogDensity& log_density, std::size_t dim, double lo,
                              double hi, std::size_t resolution) {
  if (dim == 0 || dim > 2)
    throw std::invalid_argument("grid_integrate_density: supports 1 or 2 dimensions, got " +
                                std::to_string(dim));
  if (resolution == 0 || !(hi > lo)) throw std::invalid_argument("grid_integrate_density: bad grid");
  const double h = (hi - lo) / static_cast<double>(resolution);
  double total = 0.0;
  Vec x(dim);
  if (dim == 1) {
    for (std::size_t i = 0; i < resolution; ++i) {
      x[0] = lo + (static_cast<double>(i) + 0.5) * h;
      total += std::exp(log_density(x));
    }
    return total * h;
  }
  for (std::size_t i = 0; i < resolution; ++i)
    for (std::size_t j = 0; j < resolution; ++j) {
      x[0] = lo + (static_cast<double>(i) + 0.5) * h;
      x[1] = lo + (static_cast<double>(j) + 0.5) * h;
      total += std::exp(log_density(x));
    }
  return total * h * h;
}

double Gaussian::log_density(std::span<const double> x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("Gaussian: dimension mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - mean[i]) * (x[i] - mean[i]);
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * variance) - 0.5 * sq / variance;
}

Gaussian bandit_posterior(double k, const Vec& target, double reward_scale) {
  if (!(k > 0.0)) throw std::invalid_argument("bandit_posterior: k must be positive");
  if (!(reward_scale > 0.0)) throw std::invalid_argument("bandit_posterior: reward_scale must be positive");
  return Gaussian{target, 1.0 / (2.0 * k * reward_scale)};
}

}  // namespace lsp::oracle
