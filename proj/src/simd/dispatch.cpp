// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"
#include "thermoloop/simd/kernels.hpp"

namespace thermoloop::simd {

std::string_view to_string(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{Isa::Scalar,        scalar::dot,     scalar::gemv,
                                 scalar::gemv_t_acc, scalar::ger_acc, scalar::axpy,
                                 scalar::affine_batch_t};
  return table;
}

const KernelTable* avx2_kernels() noexcept {
#if defined(THERMOLOOP_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  static const KernelTable table{Isa::Avx2,        avx2::dot,     avx2::gemv,
                                 avx2::gemv_t_acc, avx2::ger_acc, avx2::axpy,
                                 avx2::affine_batch_t};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* env = std::getenv("THERMOLOOP_SIMD");
    const std::string_view request = env ? env : "auto";
    if (request == "scalar") return scalar_kernels();
    if (const KernelTable* wide = avx2_kernels()) return *wide;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace thermoloop::simd
