// SPDX-License-Identifier: Apache-2.0
#pragma once

// Couples a controller to the simulated plant at the sample rate.
//
// Measurements travel plant -> controller through a single-producer,
// single-consumer ring so a hardware acquisition thread could take the
// plant's place; in simulation both ends run on the tick loop.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "thermoloop/mpc.hpp"
#include "thermoloop/plant.hpp"

namespace thermoloop::mpc {

struct Measurement {
  double time = 0.0;  // s
  double temp = 0.0;  // K
};

/// Bounded lock-free SPSC queue. try_push never blocks and fails when full;
/// readers drain with try_pop.
class MeasurementQueue {
 public:
  explicit MeasurementQueue(std::size_t capacity);
  bool try_push(const Measurement& m);
  std::optional<Measurement> try_pop();
  std::size_t capacity() const { return slots_.size() - 1; }

 private:
  std::vector<Measurement> slots_;
  std::atomic<std::size_t> head_{0};  // next read
  std::atomic<std::size_t> tail_{0};  // next write
};

struct ClosedLoopOptions {
  double duration = 1000.0;  // s, total including warm-up
  std::uint64_t seed = 0;
  double initial_temp = 300.15;  // K
  /// Minimum warm-up length in samples; the controller's own history length
  /// is always waited for.
  std::size_t warmup_samples = 0;
  /// Warm-up hold current; by default the zero-load equilibrium at the setpoint.
  std::optional<double> hold_current;
  /// Abort after this many consecutive over-budget solves (0 disables).
  std::size_t max_consecutive_over_budget = 25;
  /// Record solve_ms as 0 so traces are bit-reproducible.
  bool omit_timing = false;
};

struct LoopRow {
  std::size_t tick = 0;
  double time = 0.0;       // s, end of the period
  double temp_meas = 0.0;  // K, reading at `time`
  double temp_true = 0.0;  // K
  double current = 0.0;    // A, applied during the period
  double solve_ms = 0.0;
  double best_cost = std::numeric_limits<double>::quiet_NaN();  // NaN during warm-up
};

struct ClosedLoopResult {
  std::vector<LoopRow> rows;
  std::size_t warmup_ticks = 0;
  std::size_t over_budget_ticks = 0;
  std::vector<double> solve_seconds;  // controlled ticks only
};

/// Warm-up holds a fixed current until the predictor has a full history,
/// then each tick solves and applies the first current of the optimum.
ClosedLoopResult run_closed_loop(const plant::PlantConfig& plant_cfg, const Predictor& controller,
                                 const MpcConfig& cfg, const ClosedLoopOptions& options);

/// Zero-load equilibrium current at `setpoint`. When the setpoint is above
/// what the unloaded plant can hold, the current of maximum net heating.
double default_hold_current(const plant::PlantConfig& plant_cfg, double setpoint);

/// `tick,time_s,temp_meas_K,temp_true_K,current_A,solve_ms,global_best_cost`
std::string closed_loop_csv(const ClosedLoopResult& result);

/// Parsed back from closed_loop_csv.
std::vector<LoopRow> read_closed_loop_csv(const std::filesystem::path& path);

double percentile(std::vector<double> values, double q);

}  // namespace thermoloop::mpc
