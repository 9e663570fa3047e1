// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace thermoloop::simd::scalar {
double dot(const double* a, const double* b, std::size_t n);
void gemv(const double* A, std::size_t rows, std::size_t cols, const double* x,
          const double* bias, double* y);
void gemv_t_acc(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y);
void ger_acc(double* A, std::size_t rows, std::size_t cols, const double* u, const double* v);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void affine_batch_t(const double* X, std::size_t batch, std::size_t in, const double* Wt,
                    std::size_t out, const double* bias, double* Y);
}  // namespace thermoloop::simd::scalar

#if defined(THERMOLOOP_HAVE_AVX2)
namespace thermoloop::simd::avx2 {
double dot(const double* a, const double* b, std::size_t n);
void gemv(const double* A, std::size_t rows, std::size_t cols, const double* x,
          const double* bias, double* y);
void gemv_t_acc(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y);
void ger_acc(double* A, std::size_t rows, std::size_t cols, const double* u, const double* v);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void affine_batch_t(const double* X, std::size_t batch, std::size_t in, const double* Wt,
                    std::size_t out, const double* bias, double* Y);
}  // namespace thermoloop::simd::avx2
#endif
