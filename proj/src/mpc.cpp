// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/mpc.hpp"

#include <chrono>
#include <cmath>

#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/parallel.hpp"
#include "thermoloop/rng.hpp"

namespace thermoloop::mpc {

void MpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("mpc horizon must be >= 1");
  if (swarm_size < 1) throw ConfigError("mpc.swarm_size must be >= 1");
  if (iterations < 1) throw ConfigError("mpc.iterations must be >= 1");
  if (!(current_bounds.lo <= current_bounds.hi)) throw ConfigError("current bounds are inverted");
  if (!(temp_bounds.lo < temp_bounds.hi)) throw ConfigError("temperature bounds are inverted");
  if (!(control_cost_weight >= 0.0)) throw ConfigError("mpc.control_cost_weight must be >= 0");
  if (!std::isfinite(setpoint)) throw ConfigError("setpoint must be finite");
  if (!(solve_budget > 0.0)) throw ConfigError("mpc.solve_budget_s must be positive");
  for (double v : {inertia, cognitive, social})
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("PSO coefficients must be finite and >= 0");
}

double cost(std::span<const double> pred_temps, std::span<const double> currents, double prev_applied,
            const MpcConfig& cfg) {
  if (pred_temps.size() != currents.size())
    throw SizingError("cost: " + std::to_string(pred_temps.size()) + " predictions for " +
                      std::to_string(currents.size()) + " currents");
  double tracking = 0.0, slew = 0.0, prev = prev_applied;
  for (std::size_t l = 0; l < currents.size(); ++l) {
    const double e = pred_temps[l] - cfg.setpoint;
    const double d = currents[l] - prev;
    tracking += e * e;
    slew += d * d;
    prev = currents[l];
  }
  return tracking + cfg.control_cost_weight * slew;
}

Swarm init_swarm(const MpcConfig& cfg, std::span<std::mt19937_64> rngs,
                 const std::vector<double>* seed_position) {
  if (rngs.size() != cfg.swarm_size) throw SizingError("init_swarm: one RNG stream per particle required");
  const std::size_t m = cfg.horizon;
  const Bounds& box = cfg.current_bounds;
  const double vmax = 0.1 * box.width();
  Swarm s;
  s.particles.resize(cfg.swarm_size);
  for (std::size_t p = 0; p < cfg.swarm_size; ++p) {
    auto& part = s.particles[p];
    part.position.resize(m);
    part.velocity.resize(m);
    for (std::size_t d = 0; d < m; ++d) {
      part.position[d] = box.clamp(box.lo + box.width() * unit_uniform(rngs[p]));
      part.velocity[d] = vmax * (2.0 * unit_uniform(rngs[p]) - 1.0);
    }
    part.best_position = part.position;
  }
  if (seed_position && seed_position->size() == m)
    for (std::size_t d = 0; d < m; ++d) s.particles[0].position[d] = box.clamp((*seed_position)[d]);
  s.global_best_position = s.particles.front().position;
  return s;
}

void record_costs(Swarm& swarm, std::span<const double> costs) {
  if (costs.size() != swarm.particles.size()) throw SizingError("record_costs: one cost per particle required");
  for (std::size_t p = 0; p < costs.size(); ++p) {
    auto& part = swarm.particles[p];
    if (costs[p] < part.best_cost) {
      part.best_cost = costs[p];
      part.best_position = part.position;
    }
    if (part.best_cost < swarm.global_best_cost) {
      swarm.global_best_cost = part.best_cost;
      swarm.global_best_position = part.best_position;
    }
  }
}

void pso_update(Swarm& swarm, const MpcConfig& cfg, std::span<std::mt19937_64> rngs) {
  if (rngs.size() != swarm.particles.size()) throw SizingError("pso_update: one RNG stream per particle required");
  for (std::size_t p = 0; p < swarm.particles.size(); ++p) {
    auto& part = swarm.particles[p];
    for (std::size_t d = 0; d < part.position.size(); ++d) {
      const double r1 = unit_uniform(rngs[p]);
      const double r2 = unit_uniform(rngs[p]);
      part.velocity[d] = cfg.inertia * part.velocity[d] +
                         cfg.cognitive * r1 * (part.best_position[d] - part.position[d]) +
                         cfg.social * r2 * (swarm.global_best_position[d] - part.position[d]);
      part.position[d] = cfg.current_bounds.clamp(part.position[d] + part.velocity[d]);
    }
  }
  ++swarm.iteration;
}

std::vector<double> evaluate_candidates(const ConditionedPredictor& predictor, const Swarm& swarm,
                                        double prev_applied, const MpcConfig& cfg) {
  const std::size_t n = swarm.particles.size(), m = cfg.horizon;
  std::vector<double> currents(n * m), temps(n * m), costs(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (swarm.particles[p].position.size() != m) throw SizingError("particle dimension differs from horizon");
    std::copy(swarm.particles[p].position.begin(), swarm.particles[p].position.end(), currents.begin() + p * m);
  }

  const std::size_t chunks = std::max<std::size_t>(1, std::min(cfg.jobs, n));
  const std::size_t per = (n + chunks - 1) / chunks;
  parallel_for(chunks, chunks, [&](std::size_t c) {
    const std::size_t b = c * per, e = std::min(n, b + per);
    if (b >= e) return;
    predictor.predict(std::span<const double>(currents).subspan(b * m, (e - b) * m), e - b,
                      std::span<double>(temps).subspan(b * m, (e - b) * m));
  });

  for (std::size_t p = 0; p < n; ++p) {
    const std::span<const double> t(temps.data() + p * m, m);
    bool feasible = true;
    for (double v : t) feasible = feasible && cfg.temp_bounds.contains(v);
    if (feasible) {
      costs[p] = cost(t, swarm.particles[p].position, prev_applied, cfg);
    } else {
      const double pb = swarm.particles[p].best_cost;
      costs[p] = std::isfinite(pb) ? pb + 1.0 : kPenaltySentinel;
    }
  }
  return costs;
}

SolveResult solve(std::span<const double> history, double prev_applied, const Predictor& predictor,
                  const MpcConfig& cfg, std::uint64_t tick_seed, const std::vector<double>* warm) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  cfg.validate();
  if (predictor.horizon() != cfg.horizon)
    throw ConfigError("predictor horizon " + std::to_string(predictor.horizon()) + " differs from mpc horizon " +
                      std::to_string(cfg.horizon));
  const auto conditioned = predictor.condition(history);

  std::vector<std::mt19937_64> rngs;
  rngs.reserve(cfg.swarm_size);
  for (std::size_t p = 0; p < cfg.swarm_size; ++p) rngs.emplace_back(derive_seed(tick_seed, p));
  Swarm swarm = init_swarm(cfg, rngs, cfg.warm_start ? warm : nullptr);

  SolveResult res;
  auto& diag = res.diagnostics;
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    record_costs(swarm, evaluate_candidates(*conditioned, swarm, prev_applied, cfg));
    diag.best_cost_per_iteration.push_back(swarm.global_best_cost);
    ++diag.iterations_run;
    if (cfg.enforce_budget && elapsed() > cfg.solve_budget) {
      diag.over_budget = true;
      break;
    }
    if (it + 1 < cfg.iterations) pso_update(swarm, cfg, rngs);
  }
  res.sequence = swarm.global_best_position;
  res.best_cost = swarm.global_best_cost;
  diag.solve_seconds = elapsed();
  diag.over_budget = diag.over_budget || diag.solve_seconds > cfg.solve_budget;
  return res;
}

MpcConfig mpc_config_from(const KeyValueConfig& kv, MpcConfig base) {
  static const std::vector<std::string_view> known = {
      "swarm_size", "iterations", "inertia", "c1", "c2", "control_cost_weight", "solve_budget_s",
      "enforce_budget", "warm_start", "seed"};
  if (auto unknown = kv.unknown_keys("mpc", known); !unknown.empty())
    throw ConfigError("unknown config key " + unknown.front());
  auto count = [&](std::string_view key, std::size_t fallback) {
    const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 1) throw ConfigError(std::string(key) + " must be >= 1");
    return static_cast<std::size_t>(v);
  };
  MpcConfig c = base;
  c.swarm_size = count("mpc.swarm_size", c.swarm_size);
  c.iterations = count("mpc.iterations", c.iterations);
  c.inertia = kv.get_double("mpc.inertia", c.inertia);
  c.cognitive = kv.get_double("mpc.c1", c.cognitive);
  c.social = kv.get_double("mpc.c2", c.social);
  c.control_cost_weight = kv.get_double("mpc.control_cost_weight", c.control_cost_weight);
  c.solve_budget = kv.get_double("mpc.solve_budget_s", c.solve_budget);
  c.enforce_budget = kv.get_bool("mpc.enforce_budget", c.enforce_budget);
  c.warm_start = kv.get_bool("mpc.warm_start", c.warm_start);
  c.seed = kv.get_u64("mpc.seed", c.seed);
  c.validate();
  return c;
}

void write_mpc_config(KeyValueConfig& kv, const MpcConfig& c) {
  kv.set("mpc.swarm_size", std::to_string(c.swarm_size));
  kv.set("mpc.iterations", std::to_string(c.iterations));
  kv.set("mpc.inertia", format_double(c.inertia));
  kv.set("mpc.c1", format_double(c.cognitive));
  kv.set("mpc.c2", format_double(c.social));
  kv.set("mpc.control_cost_weight", format_double(c.control_cost_weight));
  kv.set("mpc.solve_budget_s", format_double(c.solve_budget));
  kv.set("mpc.enforce_budget", c.enforce_budget ? "true" : "false");
  kv.set("mpc.warm_start", c.warm_start ? "true" : "false");
  kv.set("mpc.seed", std::to_string(c.seed));
}

}  // namespace thermoloop::mpc
