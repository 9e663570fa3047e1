// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/cli.hpp"

int main(int argc, char** argv) { return thermoloop::cli::run(argc, argv); }
