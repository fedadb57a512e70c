#include "lsp/core/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace lsp::kernels {
namespace {

inline void row_times_matrix(const double* a_row, const double* b, double* c_row,
                             std::size_t k, std::size_t n) {
  std::fill(c_row, c_row + n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a_row[p];
    const double* b_row = b + p * n;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
  }
}

inline double dot(const double* x, const double* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += x[j] * y[j];
    s1 += x[j + 1] * y[j + 1];
    s2 += x[j + 2] * y[j + 2];
    s3 += x[j + 3] * y[j + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; j < n; ++j) s += x[j] * y[j];
  return s;
}

inline bool use_parallel(std::size_t m, std::size_t k, std::size_t n) {
  return m * k * n >= kParallelThreshold && omp_get_max_threads() > 1;
}

}  // namespace

void matmul_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) row_times_matrix(a + i * k, b, c + i * n, k, n);
}

void matmul_omp(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    row_times_matrix(a + r * k, b, c + r * n, k, n);
  }
}

void matmul_bt_acc_serial(const double* g, const double* b, double* c, std::size_t m,
                          std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) c[i * k + p] += dot(g + i * n, b + p * n, n);
}

void matmul_bt_acc_omp(const double* g, const double* b, double* c, std::size_t m,
                       std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t p = 0; p < k; ++p) c[r * k + p] += dot(g + r * n, b + p * n, n);
  }
}

void matmul_at_acc_serial(const double* a, const double* g, double* c, std::size_t m,
                          std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* g_row = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* c_row = c + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) c_row[j] += av * g_row[j];
    }
  }
}

void matmul_at_acc_omp(const double* a, const double* g, double* c, std::size_t m,
                       std::size_t k, std::size_t n) {
  // Parallel over rows of C; each element still accumulates over i in order.
  const auto out_rows = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < out_rows; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    double* c_row = c + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* g_row = g + i * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) c_row[j] += av * g_row[j];
    }
  }
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
  if (use_parallel(m, k, n))
    matmul_omp(a, b, c, m, k, n);
  else
    matmul_serial(a, b, c, m, k, n);
}

void matmul_bt_acc(const double* g, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  if (use_parallel(m, k, n))
    matmul_bt_acc_omp(g, b, c, m, k, n);
  else
    matmul_bt_acc_serial(g, b, c, m, k, n);
}

void matmul_at_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  if (use_parallel(m, k, n))
    matmul_at_acc_omp(a, g, c, m, k, n);
  else
    matmul_at_acc_serial(a, g, c, m, k, n);
}

}  // namespace lsp::kernels
