// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "kernels_impl.hpp"

namespace thermoloop::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double dot_impl(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline void axpy_impl(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) { return dot_impl(a, b, n); }

void gemv(const double* A, std::size_t rows, std::size_t cols, const double* x,
          const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double acc = dot_impl(A + r * cols, x, cols);
    y[r] = bias ? bias[r] + acc : acc;
  }
}

void gemv_t_acc(const double* A, std::size_t rows, std::size_t cols, const double* x,
                double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy_impl(x[r], A + r * cols, y, cols);
}

void ger_acc(double* A, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) axpy_impl(u[r], v, A + r * cols, cols);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) { axpy_impl(alpha, x, y, n); }

void affine_batch_t(const double* X, std::size_t batch, std::size_t in, const double* Wt,
                    std::size_t out, const double* bias, double* Y) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = X + b * in;
    double* yb = Y + b * out;
    std::size_t o = 0;
    for (; o + 4 <= out; o += 4) {
      __m256d acc = bias ? _mm256_loadu_pd(bias + o) : _mm256_setzero_pd();
      for (std::size_t i = 0; i < in; ++i) {
        acc = _mm256_fmadd_pd(_mm256_set1_pd(xb[i]), _mm256_loadu_pd(Wt + i * out + o), acc);
      }
      _mm256_storeu_pd(yb + o, acc);
    }
    for (; o < out; ++o) {
      double acc = bias ? bias[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += xb[i] * Wt[i * out + o];
      yb[o] = acc;
    }
  }
}

}  // namespace thermoloop::simd::avx2
