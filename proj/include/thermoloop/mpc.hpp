// SPDX-License-Identifier: Apache-2.0
#pragma once

// Receding-horizon controller: particle swarm search over the next m drive
// currents, scored by tracking error plus a current-slew penalty. Candidates
// whose predicted temperatures leave the safe band are scored one above the
// particle's personal best so they can never displace it.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "thermoloop/kv_config.hpp"
#include "thermoloop/predictor.hpp"
#include "thermoloop/units.hpp"

namespace thermoloop::mpc {

struct MpcConfig {
  std::size_t horizon = 5;
  std::size_t swarm_size = 100;
  std::size_t iterations = 30;
  double inertia = 0.5;
  double cognitive = 1.5;  // c1
  double social = 1.5;     // c2
  Bounds current_bounds{-2.0, 2.0};      // A
  Bounds temp_bounds{278.15, 313.15};    // K
  double control_cost_weight = 0.01;
  double setpoint = 298.15;  // K
  double solve_budget = 0.1;  // s
  // Stop iterating once the budget is spent. Off by default: results would
  // otherwise depend on machine speed.
  bool enforce_budget = false;
  bool warm_start = false;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;  // candidate-evaluation threads; never changes results

  void validate() const;
};

/// Cost assigned to an infeasible candidate whose particle has no finite
/// personal best yet.
inline constexpr double kPenaltySentinel = 1e6;

/// sum_l (T_l - T_ref)^2 + w * sum_l (I_l - I_{l-1})^2 with I_0 = prev_applied.
double cost(std::span<const double> pred_temps, std::span<const double> currents, double prev_applied,
            const MpcConfig& cfg);

struct Particle {
  std::vector<double> position;       // A
  std::vector<double> velocity;       // A per iteration
  std::vector<double> best_position;
  double best_cost = std::numeric_limits<double>::infinity();
};

struct Swarm {
  std::vector<Particle> particles;
  std::vector<double> global_best_position;
  double global_best_cost = std::numeric_limits<double>::infinity();
  std::size_t iteration = 0;
};

/// Uniform U[0, 1) from the top 53 bits, identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Particle p draws from rngs[p]. Positions uniform in the current box,
/// velocities uniform in +-10% of its width. With `seed_position` particle 0
/// starts there instead.
Swarm init_swarm(const MpcConfig& cfg, std::span<std::mt19937_64> rngs,
                 const std::vector<double>* seed_position = nullptr);

/// Records `costs` of the current positions into personal and global bests.
/// A cost replaces a best only when strictly lower.
void record_costs(Swarm& swarm, std::span<const double> costs);

/// One velocity/position step with fresh r1, r2 per particle and dimension,
/// followed by clamping into the current box.
void pso_update(Swarm& swarm, const MpcConfig& cfg, std::span<std::mt19937_64> rngs);

/// Scores every particle's current position. Positions are predicted in
/// chunks on cfg.jobs threads.
std::vector<double> evaluate_candidates(const ConditionedPredictor& predictor, const Swarm& swarm,
                                        double prev_applied, const MpcConfig& cfg);

struct SolveDiagnostics {
  std::vector<double> best_cost_per_iteration;
  double solve_seconds = 0.0;
  bool over_budget = false;
  std::size_t iterations_run = 0;
};

struct SolveResult {
  std::vector<double> sequence;  // A, m values
  double best_cost = 0.0;
  SolveDiagnostics diagnostics;
};

/// `tick_seed` fixes every particle's stream; `warm` optionally seeds
/// particle 0 when cfg.warm_start is set.
SolveResult solve(std::span<const double> history, double prev_applied, const Predictor& predictor,
                  const MpcConfig& cfg, std::uint64_t tick_seed,
                  const std::vector<double>* warm = nullptr);

// `mpc.` keys of a flat config.
MpcConfig mpc_config_from(const KeyValueConfig& kv, MpcConfig base = {});
void write_mpc_config(KeyValueConfig& kv, const MpcConfig& cfg);

}  // namespace thermoloop::mpc
