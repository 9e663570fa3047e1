// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/experiment.hpp"

#include <cmath>

#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/parallel.hpp"
#include "thermoloop/predictor.hpp"
#include "thermoloop/rng.hpp"
#include "thermoloop/units.hpp"

namespace thermoloop::experiment {

void BenchmarkPlan::validate() const {
  if (setpoints.empty() || powers.empty() || controllers.empty() || seeds.empty())
    throw ConfigError("benchmark plan needs at least one setpoint, power, controller and seed");
  if (!(duration >= metrics::kMinStabilityWindow))
    throw ConfigError("benchmark duration must be at least " + format_double(metrics::kMinStabilityWindow) + " s");
  if (!(settle >= 0.0)) throw ConfigError("settle time must be >= 0");
}

std::string Cell::label() const {
  return controller + "_" + format_double(kelvin_to_celsius(setpoint)) + "C_" + format_double(power) + "W_s" +
         std::to_string(seed);
}

std::vector<Cell> cells(const BenchmarkPlan& plan) {
  std::vector<Cell> out;
  for (auto seed : plan.seeds)
    for (double p : plan.powers)
      for (double sp : plan.setpoints)
        for (const auto& c : plan.controllers) out.push_back({c, sp, p, seed});
  return out;
}

CellResult run_cell(const BenchmarkPlan& plan, const Cell& cell, const mpc::Predictor& controller,
                    const plant::PlantConfig& plant_base, const mpc::MpcConfig& mpc_base, bool omit_timing) {
  plant::PlantConfig pc = plant_base;
  pc.laser_power = cell.power;
  mpc::MpcConfig mc = mpc_base;
  mc.setpoint = cell.setpoint;
  mc.current_bounds = pc.current_bounds;
  mc.temp_bounds = pc.temp_bounds;
  mc.horizon = controller.horizon();

  mpc::ClosedLoopOptions o;
  o.duration = plan.settle + plan.duration;
  o.seed = cell.seed;
  o.omit_timing = omit_timing;
  o.initial_temp = pc.constants.hot_side_temp;
  o.warmup_samples = 100;  // same hold phase for every controller

  CellResult r;
  r.loop = mpc::run_closed_loop(pc, controller, mc, o);
  const auto window = static_cast<std::size_t>(std::llround(plan.duration / pc.sample_period));
  if (r.loop.rows.size() < window) throw SizingError("closed loop shorter than the evaluated window");
  r.window_begin = r.loop.rows.size() - window;
  std::vector<double> temps;
  temps.reserve(window);
  for (std::size_t i = r.window_begin; i < r.loop.rows.size(); ++i) temps.push_back(r.loop.rows[i].temp_meas);
  r.stability = metrics::stability_report(temps, pc.sample_period);
  return r;
}

std::vector<datagen::SampleWindow> reference_windows(const plant::PlantConfig& plant_base,
                                                     const mpc::MpcConfig& mpc_base, double setpoint,
                                                     double power, double duration, std::uint64_t seed,
                                                     std::size_t history_len, std::size_t horizon) {
  plant::PlantConfig pc = plant_base;
  pc.laser_power = power;
  mpc::PhysicsPredictor reference(pc.constants, 0.0, pc.sample_period, pc.substeps_per_sample, horizon);
  mpc::MpcConfig mc = mpc_base;
  mc.setpoint = setpoint;
  mc.horizon = horizon;
  mc.current_bounds = pc.current_bounds;
  mc.temp_bounds = pc.temp_bounds;
  mpc::ClosedLoopOptions o;
  o.duration = duration;
  o.seed = derive_seed(seed, 0x7e5);
  o.omit_timing = true;
  o.initial_temp = pc.constants.hot_side_temp;
  const auto loop = mpc::run_closed_loop(pc, reference, mc, o);
  std::vector<double> temps, currents;
  for (const auto& row : loop.rows) {
    temps.push_back(row.temp_meas);
    currents.push_back(row.current);
  }
  if (temps.size() < history_len + horizon) return {};
  return datagen::window_trajectory(temps, currents, history_len, horizon, 1);
}

metrics::PredictionReport evaluate_predictions(const mpc::Predictor& predictor,
                                               std::span<const datagen::SampleWindow> windows, std::size_t jobs) {
  const std::size_t m = predictor.horizon();
  std::vector<double> preds(windows.size() * m), targets(windows.size() * m);
  parallel_for(windows.size(), jobs, [&](std::size_t i) {
    const auto& w = windows[i];
    if (w.target_temps.size() != m) throw SizingError("window horizon differs from predictor horizon");
    const auto p = predictor.predict_one(w.history_temps, w.control_currents);
    std::copy(p.begin(), p.end(), preds.begin() + static_cast<std::ptrdiff_t>(i * m));
    std::copy(w.target_temps.begin(), w.target_temps.end(), targets.begin() + static_cast<std::ptrdiff_t>(i * m));
  });
  return metrics::stepwise_errors(preds, targets, windows.size(), m);
}

}  // namespace thermoloop::experiment
