// SPDX-License-Identifier: Apache-2.0
#include "kernels_impl.hpp"

namespace thermoloop::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void gemv(const double* A, std::size_t rows, std::size_t cols, const double* x,
          const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = A + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = bias ? bias[r] + acc : acc;
  }
}

void gemv_t_acc(const double* A, std::size_t rows, std::size_t cols, const double* x,
                double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = A + r * cols;
    const double xr = x[r];
    for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

void ger_acc(double* A, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = A + r * cols;
    const double ur = u[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void affine_batch_t(const double* X, std::size_t batch, std::size_t in, const double* Wt,
                    std::size_t out, const double* bias, double* Y) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = X + b * in;
    double* yb = Y + b * out;
    for (std::size_t o = 0; o < out; ++o) yb[o] = bias ? bias[o] : 0.0;
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xb[i];
      const double* wrow = Wt + i * out;
      for (std::size_t o = 0; o < out; ++o) yb[o] += xi * wrow[o];
    }
  }
}

}  // namespace thermoloop::simd::scalar
