// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <memory>

#include "common.hpp"
#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/experiment.hpp"
#include "thermoloop/parallel.hpp"
#include "thermoloop/units.hpp"

namespace thermoloop::cli {
namespace {

struct BenchOptions {
  std::filesystem::path gru;
  std::filesystem::path pigru;
  std::filesystem::path out;
  std::vector<std::filesystem::path> configs;
  std::string setpoints = "20,25,30";
  std::string powers = "0.5,1,1.5";
  std::vector<std::string> controllers{"linear", "gru", "pigru"};
  double duration = 1000.0;
  double settle = 300.0;
  std::vector<std::uint64_t> seeds{1};
  double reference_duration = 600.0;
  bool skip_predictions = false;
  bool omit_timing = false;
  std::size_t jobs = 0;
  LinearSource linear;
};

struct CellOutcome {
  bool ok = false;
  std::string error;
  experiment::CellResult result;
};

std::string allan_columns(const std::vector<double>& taus) {
  std::string out;
  for (double t : taus) out += ",allan_" + format_double(t) + "s";
  return out;
}

void run_bench(const BenchOptions& opt) {
  KeyValueConfig kv = load_configs(opt.configs);
  const auto plant_cfg = plant::plant_config_from(kv);
  auto mc = mpc::mpc_config_from(kv);
  mc.jobs = 1;  // parallelism goes across cells

  experiment::BenchmarkPlan plan;
  plan.setpoints.clear();
  for (double c : parse_number_list(opt.setpoints)) plan.setpoints.push_back(celsius_to_kelvin(c));
  plan.powers = parse_number_list(opt.powers);
  plan.controllers = opt.controllers;
  plan.duration = opt.duration;
  plan.settle = opt.settle;
  plan.seeds = opt.seeds;
  plan.validate();

  std::map<std::string, std::unique_ptr<mpc::Predictor>> controllers;
  for (const auto& name : plan.controllers) {
    if (controllers.contains(name)) continue;
    if (name == "gru" || name == "pigru") {
      const auto& path = name == "gru" ? opt.gru : opt.pigru;
      if (path.empty()) throw UsageError("controller " + name + " needs --" + name);
      controllers[name] = make_controller(path.string(), plant_cfg, opt.linear, mc.horizon, name);
    } else {
      controllers[name] = make_controller(name, plant_cfg, opt.linear, mc.horizon);
    }
  }

  KeyValueConfig effective;
  plant::write_plant_config(effective, plant_cfg);
  mpc::write_mpc_config(effective, mc);
  effective.set("bench.setpoints_C", opt.setpoints);
  effective.set("bench.powers_W", opt.powers);
  effective.set("bench.duration_s", format_double(plan.duration));
  effective.set("bench.settle_s", format_double(plan.settle));
  if (auto it = controllers.find("linear"); it != controllers.end()) {
    const auto& lm = dynamic_cast<const mpc::LinearPredictor&>(*it->second).model();
    effective.set("linear.gain", format_double(lm.gain));
    effective.set("linear.decay", format_double(lm.decay));
  }

  const auto grid = experiment::cells(plan);
  std::vector<CellOutcome> outcomes(grid.size());
  const std::size_t jobs = resolve_jobs(opt.jobs);
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    auto& o = outcomes[i];
    try {
      o.result = experiment::run_cell(plan, grid[i], *controllers.at(grid[i].controller), plant_cfg, mc,
                                      opt.omit_timing);
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  });

  StagedDir dir(opt.out);
  const std::vector<double> taus{1.0, 10.0, 100.0};
  std::string table3 = "controller,setpoint_C,power_W,seed,status,range,std" + allan_columns(taus) +
                       ",p95_solve_ms,over_budget_ticks\n";
  std::size_t failed = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& cell = grid[i];
    const auto& o = outcomes[i];
    const auto cell_dir = dir.path() / "cells" / cell.label();
    std::filesystem::create_directories(cell_dir);
    table3 += cell.controller + ',' + format_double(kelvin_to_celsius(cell.setpoint)) + ',' +
              format_double(cell.power) + ',' + std::to_string(cell.seed) + ',';
    if (!o.ok) {
      ++failed;
      write_file_atomic(cell_dir / "error.txt", o.error + '\n');
      table3 += "failed,,";
      for (std::size_t k = 0; k < taus.size(); ++k) table3 += ',';
      table3 += ",\n";
      std::fprintf(stderr, "cell %s failed: %s\n", cell.label().c_str(), o.error.c_str());
      continue;
    }
    const auto& r = o.result;
    write_file_atomic(cell_dir / "trace.csv", mpc::closed_loop_csv(r.loop));
    write_file_atomic(cell_dir / "stability.csv",
                      metrics::stability_header(r.stability.allan) + metrics::stability_row(cell.label(), r.stability));
    table3 += "ok,";
    append_double(table3, r.stability.range);
    table3 += ',';
    append_double(table3, r.stability.std);
    for (double t : taus) {
      table3 += ',';
      for (const auto& a : r.stability.allan)
        if (a.tau == t) append_double(table3, a.sigma);
    }
    table3 += ',';
    append_double(table3, r.loop.solve_seconds.empty() || opt.omit_timing
                              ? 0.0
                              : 1e3 * mpc::percentile(r.loop.solve_seconds, 95));
    table3 += ',' + std::to_string(r.loop.over_budget_ticks) + '\n';
  }
  write_file_atomic(dir.path() / "table3.csv", table3);

  if (!opt.skip_predictions) {
    // Held-out traces: a controller that assumes the unloaded physics, at
    // every (setpoint, power); scored per power with all setpoints pooled.
    std::size_t n = 1;
    for (const auto& [_, c] : controllers) n = std::max(n, c->history_len());
    std::string table2 = "model,power_W,seed,step,mae,rmse,mape_pct\n";
    for (auto seed : plan.seeds)
      for (double p : plan.powers) {
        std::vector<datagen::SampleWindow> windows;
        for (double sp : plan.setpoints) {
          auto w = experiment::reference_windows(plant_cfg, mc, sp, p, opt.reference_duration, seed, n, mc.horizon);
          windows.insert(windows.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
        }
        for (const auto& [name, c] : controllers) {
          if (name == "physics") continue;
          const auto rep = experiment::evaluate_predictions(*c, windows, jobs);
          const std::string body = metrics::prediction_report_csv(name, rep);
          // Re-key rows of the plain layout with power and seed.
          for (std::size_t pos = body.find('\n') + 1; pos < body.size();) {
            const auto end = body.find('\n', pos);
            const auto line = body.substr(pos, end - pos);
            const auto comma = line.find(',');
            table2 += line.substr(0, comma) + ',' + format_double(p) + ',' + std::to_string(seed) +
                      line.substr(comma) + '\n';
            pos = end + 1;
          }
        }
      }
    write_file_atomic(dir.path() / "table2.csv", table2);
  }

  write_config_echo(dir.path() / "effective_config.txt", effective);
  dir.commit();
  std::printf("%zu cells, %zu failed -> %s\n", grid.size(), failed, opt.out.string().c_str());
}

}  // namespace

void add_bench(CLI::App& root, Action& action) {
  auto opt = std::make_shared<BenchOptions>();
  auto* cmd = root.add_subcommand("bench", "Closed-loop benchmark grid with stability and prediction tables");
  cmd->add_option("--gru", opt->gru, "GRU checkpoint (trained without physics)")->check(CLI::ExistingFile);
  cmd->add_option("--pigru", opt->pigru, "PI-GRU checkpoint")->check(CLI::ExistingFile);
  cmd->add_option("--out", opt->out, "Output directory (replaced if present)")->required();
  cmd->add_option("--config", opt->configs, "Config file(s) with plant. and mpc. keys")->check(CLI::ExistingFile);
  cmd->add_option("--setpoints-C", opt->setpoints, "Comma separated setpoints")->capture_default_str();
  cmd->add_option("--powers-W", opt->powers, "Comma separated laser powers")->capture_default_str();
  cmd->add_option("--controllers", opt->controllers, "Subset of linear, gru, pigru, physics")
      ->check(CLI::IsMember({"linear", "gru", "pigru", "physics"}))
      ->delimiter(',');
  cmd->add_option("--duration-s", opt->duration, "Evaluated window per cell")->capture_default_str();
  cmd->add_option("--settle-s", opt->settle, "Discarded lead-in per cell")->capture_default_str();
  cmd->add_option("--seeds", opt->seeds, "Seeds, comma separated")->delimiter(',');
  cmd->add_option("--reference-duration-s", opt->reference_duration, "Length of each held-out reference trace")
      ->capture_default_str();
  cmd->add_flag("--no-predictions", opt->skip_predictions, "Skip the prediction table");
  cmd->add_flag("--omit-timing", opt->omit_timing, "Zero all timing columns so outputs are reproducible");
  cmd->add_option("--jobs", opt->jobs, "Cells run concurrently");
  opt->linear.add_options(*cmd);
  cmd->callback([opt, &action] { action = [opt] { run_bench(*opt); }; });
}

}  // namespace thermoloop::cli
