// SPDX-License-Identifier: Apache-2.0
#pragma once

// Benchmark grid plumbing shared by the CLI and the acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

#include "thermoloop/closed_loop.hpp"
#include "thermoloop/datagen.hpp"
#include "thermoloop/metrics.hpp"
#include "thermoloop/mpc.hpp"
#include "thermoloop/plant.hpp"

namespace thermoloop::experiment {

struct BenchmarkPlan {
  std::vector<double> setpoints{293.15, 298.15, 303.15};  // K
  std::vector<double> powers{0.5, 1.0, 1.5};              // W
  std::vector<std::string> controllers{"linear", "gru", "pigru"};
  double duration = 1000.0;  // s, evaluated window
  double settle = 300.0;     // s, run before the window and discarded
  std::vector<std::uint64_t> seeds{1};

  void validate() const;
};

struct Cell {
  std::string controller;
  double setpoint = 0.0;  // K
  double power = 0.0;     // W
  std::uint64_t seed = 0;

  /// e.g. "pigru_25C_1.5W_s1"
  std::string label() const;
};

/// Controllers vary fastest, then setpoints, powers, seeds.
std::vector<Cell> cells(const BenchmarkPlan& plan);

struct CellResult {
  mpc::ClosedLoopResult loop;
  metrics::StabilityReport stability;  // measured temperature over the evaluated window
  std::size_t window_begin = 0;        // first row of the evaluated window
};

/// Runs one cell: the plant at the cell's power, MPC tracking its setpoint
/// for settle + duration seconds, stability over the final `duration`.
CellResult run_cell(const BenchmarkPlan& plan, const Cell& cell, const mpc::Predictor& controller,
                    const plant::PlantConfig& plant_base, const mpc::MpcConfig& mpc_base, bool omit_timing);

/// Closed-loop trace under a controller that assumes the unloaded physics,
/// cut into prediction windows (measured temperatures). Used to score
/// predictors on operating points they were not trained on.
std::vector<datagen::SampleWindow> reference_windows(const plant::PlantConfig& plant_base,
                                                     const mpc::MpcConfig& mpc_base, double setpoint,
                                                     double power, double duration, std::uint64_t seed,
                                                     std::size_t history_len, std::size_t horizon);

/// Multi-step errors of `predictor` over `windows`, evaluated on `jobs` threads.
metrics::PredictionReport evaluate_predictions(const mpc::Predictor& predictor,
                                               std::span<const datagen::SampleWindow> windows,
                                               std::size_t jobs = 1);

}  // namespace thermoloop::experiment
