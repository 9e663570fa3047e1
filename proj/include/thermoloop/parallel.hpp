// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace thermoloop {

/// THERMOLOOP_JOBS if set and positive, else hardware concurrency (>= 1).
std::size_t default_jobs();

/// Runs fn(i) for i in [0, n) on up to `jobs` threads with static contiguous
/// chunking. Results must be written to per-index slots; any reduction is the
/// caller's and happens afterwards in index order, so output does not depend
/// on `jobs`. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace thermoloop
