// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>
#include <memory>

#include "common.hpp"
#include "thermoloop/closed_loop.hpp"
#include "thermoloop/csv.hpp"
#include "thermoloop/units.hpp"

namespace thermoloop::cli {
namespace {

struct RunLoopOptions {
  std::string model;
  std::vector<std::filesystem::path> plant;
  std::vector<std::filesystem::path> configs;
  double setpoint_c = 25.0;
  std::optional<double> power;
  double duration = 1000.0;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  bool omit_timing = false;
  std::optional<double> hold_current;
  std::size_t warmup_samples = 0;
  std::size_t jobs = 0;
  LinearSource linear;
};

void run_run_loop(const RunLoopOptions& opt) {
  std::vector<std::filesystem::path> layers = opt.plant;
  layers.insert(layers.end(), opt.configs.begin(), opt.configs.end());
  KeyValueConfig kv = load_configs(layers);
  if (opt.power) kv.set("plant.laser_power_W", format_double(*opt.power));
  kv.set("mpc.seed", std::to_string(opt.seed));

  const auto plant_cfg = plant::plant_config_from(kv);
  auto mc = mpc::mpc_config_from(kv);
  mc.setpoint = celsius_to_kelvin(opt.setpoint_c);
  mc.current_bounds = plant_cfg.current_bounds;
  mc.temp_bounds = plant_cfg.temp_bounds;
  mc.jobs = resolve_jobs(opt.jobs);
  const auto controller = make_controller(opt.model, plant_cfg, opt.linear, mc.horizon);
  mc.horizon = controller->horizon();

  mpc::ClosedLoopOptions lo;
  lo.duration = opt.duration;
  lo.seed = opt.seed;
  lo.omit_timing = opt.omit_timing;
  lo.hold_current = opt.hold_current;
  lo.warmup_samples = opt.warmup_samples;
  lo.initial_temp = plant_cfg.constants.hot_side_temp;

  KeyValueConfig effective;
  plant::write_plant_config(effective, plant_cfg);
  mpc::write_mpc_config(effective, mc);
  effective.set("run.model", opt.model);
  effective.set("run.setpoint_K", format_double(mc.setpoint));
  effective.set("run.duration_s", format_double(opt.duration));
  effective.set("run.seed", std::to_string(opt.seed));
  if (const auto* lin = dynamic_cast<const mpc::LinearPredictor*>(controller.get())) {
    effective.set("linear.gain", format_double(lin->model().gain));
    effective.set("linear.decay", format_double(lin->model().decay));
  }

  const auto res = mpc::run_closed_loop(plant_cfg, *controller, mc, lo);
  write_file_atomic(opt.out, mpc::closed_loop_csv(res));
  write_config_echo(sidecar(opt.out, "effective_config.txt"), effective);

  std::printf("ticks %zu (warm-up %zu), over-budget solves %zu\n", res.rows.size(), res.warmup_ticks,
              res.over_budget_ticks);
  if (!res.solve_seconds.empty() && !opt.omit_timing)
    std::printf("solve time p50 %.3f ms, p95 %.3f ms\n", 1e3 * mpc::percentile(res.solve_seconds, 50),
                1e3 * mpc::percentile(res.solve_seconds, 95));
  std::printf("trace -> %s\n", opt.out.string().c_str());
}

}  // namespace

void add_run_loop(CLI::App& root, Action& action) {
  auto opt = std::make_shared<RunLoopOptions>();
  auto* cmd = root.add_subcommand("run-loop", "Run the MPC against the simulated plant");
  cmd->add_option("--model", opt->model, "Checkpoint path, 'linear' or 'physics'")->required();
  cmd->add_option("--plant", opt->plant, "Plant config file(s) (plant. keys)")->check(CLI::ExistingFile);
  cmd->add_option("--config", opt->configs, "Further config file(s), e.g. mpc. keys")->check(CLI::ExistingFile);
  cmd->add_option("--setpoint-C", opt->setpoint_c, "Temperature setpoint in degC")->capture_default_str();
  cmd->add_option("--power-W", opt->power, "Laser power (overrides plant.laser_power_W)");
  cmd->add_option("--duration-s", opt->duration, "Simulated seconds including warm-up")->capture_default_str();
  cmd->add_option("--seed", opt->seed, "Plant noise and swarm seed")->capture_default_str();
  cmd->add_option("--out", opt->out, "Closed-loop CSV")->required();
  cmd->add_flag("--omit-timing", opt->omit_timing, "Write solve_ms as 0 so traces are reproducible");
  cmd->add_option("--hold-current-A", opt->hold_current, "Warm-up hold current (default: unloaded equilibrium)");
  cmd->add_option("--warmup-samples", opt->warmup_samples, "Minimum warm-up length in samples");
  cmd->add_option("--jobs", opt->jobs, "Candidate-evaluation threads");
  opt->linear.add_options(*cmd);
  cmd->callback([opt, &action] { action = [opt] { run_run_loop(*opt); }; });
}

}  // namespace thermoloop::cli
