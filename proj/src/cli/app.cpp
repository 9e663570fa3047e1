// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>

#include "common.hpp"
#include "thermoloop/error.hpp"

namespace thermoloop::cli {

int run(int argc, char** argv) {
  CLI::App app{"Thermal plant simulation, physics-informed prediction and swarm MPC", "thermoloop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "thermoloop 0.1.0");
  Action action;
  add_gen_data(app, action);
  add_train(app, action);
  add_eval(app, action);
  add_run_loop(app, action);
  add_stability(app, action);
  add_bench(app, action);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "thermoloop: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "thermoloop: %s: %s\n", to_string(e.kind()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "thermoloop: %s\n", e.what());
    return 2;
  }
}

}  // namespace thermoloop::cli
