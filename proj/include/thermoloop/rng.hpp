// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace thermoloop {

/// Independent child seed for `stream` of `base` (splitmix64 finaliser).
/// Parallel work items draw their RNG from derive_seed(tick_seed, index) so
/// results do not depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace thermoloop
