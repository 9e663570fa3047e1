// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense double-precision kernels used by the recurrent predictor, its
// reverse pass, and batched candidate evaluation in the controller.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled into a separate translation unit and selected at
// runtime when the CPU supports it. Variants agree to rounding (FMA
// contraction and lane-wise partial sums change the last bits), never in
// structure; tests/unit/test_kernels.cpp holds the equivalence suite.
//
// Matrices are row-major. Sizes are element counts.

#include <cstddef>
#include <span>
#include <string_view>

namespace thermoloop::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[r] = bias[r] + sum_c A[r, c] * x[c]; bias may be null.
  void (*gemv)(const double* A, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* y);
  // y[c] += sum_r A[r, c] * x[r]
  void (*gemv_t_acc)(const double* A, std::size_t rows, std::size_t cols, const double* x,
                     double* y);
  // A[r, c] += u[r] * v[c]
  void (*ger_acc)(double* A, std::size_t rows, std::size_t cols, const double* u,
                  const double* v);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // Y[b, o] = bias[o] + sum_i X[b, i] * Wt[i, o] for b < batch. Wt is the
  // transposed weight (in x out) so the inner loop runs along outputs.
  void (*affine_batch_t)(const double* X, std::size_t batch, std::size_t in, const double* Wt,
                         std::size_t out, const double* bias, double* Y);
};

const KernelTable& scalar_kernels() noexcept;

/// Null when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels() noexcept;

/// The table chosen for this process. Selection happens once: the
/// THERMOLOOP_SIMD environment variable ("scalar", "avx2", "auto") wins,
/// otherwise the widest supported variant is used.
const KernelTable& active() noexcept;

// Span conveniences over the active table.

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void gemv(std::span<const double> A, std::size_t rows, std::size_t cols,
                 std::span<const double> x, const double* bias, std::span<double> y) {
  active().gemv(A.data(), rows, cols, x.data(), bias, y.data());
}

inline void gemv_t_acc(std::span<const double> A, std::size_t rows, std::size_t cols,
                       std::span<const double> x, std::span<double> y) {
  active().gemv_t_acc(A.data(), rows, cols, x.data(), y.data());
}

inline void ger_acc(std::span<double> A, std::size_t rows, std::size_t cols,
                    std::span<const double> u, std::span<const double> v) {
  active().ger_acc(A.data(), rows, cols, u.data(), v.data());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace thermoloop::simd
