// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace thermoloop::cli {

/// Entry point of the `thermoloop` command; returns the exit status
/// (0 success, 1 usage error, 2 runtime failure).
int run(int argc, char** argv);

}  // namespace thermoloop::cli
