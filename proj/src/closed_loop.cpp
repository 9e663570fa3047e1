// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/rng.hpp"

namespace thermoloop::mpc {

MeasurementQueue::MeasurementQueue(std::size_t capacity) : slots_(capacity + 1) {
  if (capacity == 0) throw ConfigError("measurement queue capacity must be >= 1");
}

bool MeasurementQueue::try_push(const Measurement& m) {
  const std::size_t tail = tail_.load(std::memory_order_relaxed);
  const std::size_t next = (tail + 1) % slots_.size();
  if (next == head_.load(std::memory_order_acquire)) return false;
  slots_[tail] = m;
  tail_.store(next, std::memory_order_release);
  return true;
}

std::optional<Measurement> MeasurementQueue::try_pop() {
  const std::size_t head = head_.load(std::memory_order_relaxed);
  if (head == tail_.load(std::memory_order_acquire)) return std::nullopt;
  const Measurement m = slots_[head];
  head_.store((head + 1) % slots_.size(), std::memory_order_release);
  return m;
}

double default_hold_current(const plant::PlantConfig& plant_cfg, double setpoint) {
  if (auto eq = plant::equilibrium_current(setpoint, plant_cfg.constants, 0.0, plant_cfg.current_bounds))
    return *eq;
  const auto& c = plant_cfg.constants;
  return plant_cfg.current_bounds.clamp(c.seebeck * setpoint / c.internal_resistance);
}

ClosedLoopResult run_closed_loop(const plant::PlantConfig& plant_cfg, const Predictor& controller,
                                 const MpcConfig& cfg, const ClosedLoopOptions& opt) {
  plant_cfg.validate();
  cfg.validate();
  if (!(opt.duration >= 0.0)) throw ConfigError("closed-loop duration must be >= 0");
  const double dt = plant_cfg.sample_period;
  const auto ticks = static_cast<std::size_t>(std::floor(opt.duration / dt + 1e-9));
  const std::size_t history_len = controller.history_len();

  const double hold = opt.hold_current.value_or(default_hold_current(plant_cfg, cfg.setpoint));
  if (!plant_cfg.current_bounds.contains(hold))
    throw ConfigError("hold current " + format_double(hold) + " A is outside the current bounds");

  plant::Rng plant_rng(derive_seed(opt.seed, 0));
  const std::uint64_t mpc_seed = derive_seed(opt.seed, 1);
  plant::PlantState state{opt.initial_temp, 0.0};
  MeasurementQueue queue(8);
  std::deque<double> history;

  ClosedLoopResult res;
  res.rows.reserve(ticks);
  auto acquire = [&](double time, double temp) {
    if (!queue.try_push({time, temp})) throw Error(ErrorKind::Io, "measurement queue overflow");
    while (auto m = queue.try_pop()) {
      history.push_back(m->temp);
      if (history.size() > history_len) history.pop_front();
    }
  };
  // The sensor is read once before the first period so the controller never
  // starts blind.
  acquire(0.0, state.cold_side_temp);

  double applied = hold;
  std::vector<double> history_buf, previous;
  std::size_t consecutive_over = 0;
  for (std::size_t tick = 0; tick < ticks; ++tick) {
    LoopRow row;
    row.tick = tick;
    const bool warm = history.size() < history_len || tick < opt.warmup_samples;
    if (warm) {
      applied = hold;
      ++res.warmup_ticks;
    } else {
      history_buf.assign(history.begin(), history.end());
      const SolveResult sol =
          solve(history_buf, applied, controller, cfg, derive_seed(mpc_seed, tick), previous.empty() ? nullptr : &previous);
      applied = plant_cfg.current_bounds.clamp(sol.sequence.front());
      row.best_cost = sol.best_cost;
      row.solve_ms = opt.omit_timing ? 0.0 : sol.diagnostics.solve_seconds * 1e3;
      res.solve_seconds.push_back(sol.diagnostics.solve_seconds);
      if (sol.diagnostics.over_budget) {
        ++res.over_budget_ticks;
        if (opt.max_consecutive_over_budget && ++consecutive_over >= opt.max_consecutive_over_budget)
          throw DivergenceError("controller '" + controller.name() + "' exceeded its " +
                                format_double(cfg.solve_budget) + " s budget on " +
                                std::to_string(consecutive_over) + " consecutive ticks (tick " +
                                std::to_string(tick) + ", t = " + format_double(state.time) + " s)");
      } else {
        consecutive_over = 0;
      }
      if (cfg.warm_start) {
        previous.assign(sol.sequence.begin() + 1, sol.sequence.end());
        previous.push_back(sol.sequence.back());
      }
    }

    plant::StepResult step;
    try {
      step = plant::step(state, applied, plant_cfg, plant_rng);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " under controller '" + controller.name() + "' at tick " +
                            std::to_string(tick));
    }
    state = step.state;
    acquire(state.time, step.measured_temp);

    row.time = state.time;
    row.temp_meas = step.measured_temp;
    row.temp_true = state.cold_side_temp;
    row.current = applied;
    res.rows.push_back(row);
  }
  return res;
}

std::string closed_loop_csv(const ClosedLoopResult& result) {
  std::string out = "tick,time_s,temp_meas_K,temp_true_K,current_A,solve_ms,global_best_cost\n";
  out.reserve(out.size() + result.rows.size() * 96);
  for (const auto& r : result.rows) {
    out += std::to_string(r.tick);
    out += ',';
    append_double(out, r.time);
    out += ',';
    append_double(out, r.temp_meas);
    out += ',';
    append_double(out, r.temp_true);
    out += ',';
    append_double(out, r.current);
    out += ',';
    append_double(out, r.solve_ms);
    out += ',';
    append_double(out, r.best_cost);
    out += '\n';
  }
  return out;
}

std::vector<LoopRow> read_closed_loop_csv(const std::filesystem::path& path) {
  const NumericTable t = read_numeric_csv(path);
  const auto tick = t.column("tick");
  const auto time = t.column("time_s");
  const auto meas = t.column("temp_meas_K");
  const auto truth = t.column("temp_true_K");
  const auto cur = t.column("current_A");
  const auto ms = t.column("solve_ms");
  const auto cost_col = t.column("global_best_cost");
  std::vector<LoopRow> rows(t.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = t.rows[i];
    rows[i] = {static_cast<std::size_t>(r[tick]), r[time], r[meas], r[truth], r[cur], r[ms], r[cost_col]};
  }
  return rows;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInputError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  // nearest-rank
  const double rank = std::ceil(q / 100.0 * static_cast<double>(values.size()));
  const std::size_t idx = rank < 1.0 ? 0 : std::min(values.size() - 1, static_cast<std::size_t>(rank) - 1);
  return values[idx];
}

}  // namespace thermoloop::mpc
