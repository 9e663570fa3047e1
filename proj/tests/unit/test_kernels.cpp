// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "thermoloop/simd/kernels.hpp"

using namespace thermoloop::simd;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Variants may differ by FMA contraction and summation order only.
void check_close(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-13 * scale);
}

// Sizes straddle the 4-lane width and its remainders.
const std::size_t kSizes[] = {0, 1, 3, 4, 5, 7, 8, 16, 17, 32, 33, 48, 100};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar reference against naive loops") {
    const auto& k = scalar_kernels();
    const double A[] = {1, 2, 3, 4, 5, 6};  // 2 x 3
    const double x[] = {1, -1, 2};
    const double bias[] = {0.5, -0.5};
    double y[2];
    k.gemv(A, 2, 3, x, bias, y);
    CHECK(y[0] == 0.5 + 1 - 2 + 6);
    CHECK(y[1] == -0.5 + 4 - 5 + 12);
    k.gemv(A, 2, 3, x, nullptr, y);
    CHECK(y[0] == 5.0);

    double yt[3] = {1, 1, 1};
    const double u[] = {2, -1};
    k.gemv_t_acc(A, 2, 3, u, yt);
    CHECK(yt[0] == 1 + 2 - 4);
    CHECK(yt[1] == 1 + 4 - 5);
    CHECK(yt[2] == 1 + 6 - 6);

    double G[6] = {};
    k.ger_acc(G, 2, 3, u, x);
    CHECK(G[0] == 2);
    CHECK(G[5] == -2);

    CHECK(k.dot(A, x, 3) == 5.0);
    double acc[3] = {1, 1, 1};
    k.axpy(2.0, x, acc, 3);
    CHECK(acc[1] == -1.0);
  }

  TEST_CASE("AVX2 variant matches scalar") {
    const auto* v = avx2_kernels();
    if (!v) {
      MESSAGE("AVX2 variant unavailable on this build or CPU; equivalence not exercised");
      return;
    }
    const auto& s = scalar_kernels();
    std::mt19937_64 rng(7);
    for (std::size_t rows : kSizes)
      for (std::size_t cols : kSizes) {
        CAPTURE(rows);
        CAPTURE(cols);
        const auto A = random_vec(rows * cols, rng);
        const auto x = random_vec(cols, rng);
        const auto u = random_vec(rows, rng);
        const auto bias = random_vec(rows, rng);
        const double scale = 1.0 + static_cast<double>(cols + rows);

        std::vector<double> ys(rows), yv(rows);
        s.gemv(A.data(), rows, cols, x.data(), bias.data(), ys.data());
        v->gemv(A.data(), rows, cols, x.data(), bias.data(), yv.data());
        check_close(ys, yv, scale);

        auto ts = random_vec(cols, rng);
        auto tv = ts;
        s.gemv_t_acc(A.data(), rows, cols, u.data(), ts.data());
        v->gemv_t_acc(A.data(), rows, cols, u.data(), tv.data());
        check_close(ts, tv, scale);

        auto gs = A, gv = A;
        s.ger_acc(gs.data(), rows, cols, u.data(), x.data());
        v->ger_acc(gv.data(), rows, cols, u.data(), x.data());
        check_close(gs, gv, 1.0);

        CHECK(std::abs(s.dot(x.data(), x.data(), cols) - v->dot(x.data(), x.data(), cols)) <= 1e-13 * scale);

        auto as = u, av = u;
        s.axpy(0.3, bias.data(), as.data(), rows);
        v->axpy(0.3, bias.data(), av.data(), rows);
        check_close(as, av, 1.0);

        // Batch affine: batch = rows, in = cols, out = rows.
        const auto Wt = random_vec(cols * rows, rng);
        std::vector<double> bs(rows * rows), bv(rows * rows);
        s.affine_batch_t(A.data(), rows, cols, Wt.data(), rows, bias.data(), bs.data());
        v->affine_batch_t(A.data(), rows, cols, Wt.data(), rows, bias.data(), bv.data());
        check_close(bs, bv, scale);
      }
  }

  TEST_CASE("active table is one of the variants") {
    const auto& a = active();
    CHECK((a.isa == Isa::Scalar || a.isa == Isa::Avx2));
    if (a.isa == Isa::Avx2) CHECK(avx2_kernels() != nullptr);
  }
}
