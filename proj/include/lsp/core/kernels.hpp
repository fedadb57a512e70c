#pragma once

#include <cstddef>

// Dense matrix kernels behind the autodiff matmul. Each kernel has a serial
// reference and an OpenMP version. The parallel versions split work over
// output rows only, so every output element is accumulated in the same order
// as the serial one and results are bit-identical.
namespace lsp::kernels {

// C[m,n] = A[m,k] * B[k,n]
void matmul_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n);
void matmul_omp(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n);

// C[m,k] += G[m,n] * B[k,n]^T
void matmul_bt_acc_serial(const double* g, const double* b, double* c, std::size_t m,
                          std::size_t k, std::size_t n);
void matmul_bt_acc_omp(const double* g, const double* b, double* c, std::size_t m,
                       std::size_t k, std::size_t n);

// C[k,n] += A[m,k]^T * G[m,n]
void matmul_at_acc_serial(const double* a, const double* g, double* c, std::size_t m,
                          std::size_t k, std::size_t n);
void matmul_at_acc_omp(const double* a, const double* g, double* c, std::size_t m,
                       std::size_t k, std::size_t n);

/// Work (m*k*n) above which the dispatchers below use the OpenMP kernels.
inline constexpr std::size_t kParallelThreshold = 1u << 18;

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n);
void matmul_bt_acc(const double* g, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n);
void matmul_at_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                   std::size_t n);

}  // namespace lsp::kernels
