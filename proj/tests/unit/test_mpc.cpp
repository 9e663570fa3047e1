// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "quadratic_surrogate.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/mpc.hpp"
#include "thermoloop/plant.hpp"
#include "thermoloop/rng.hpp"
#include "thermoloop/units.hpp"

using namespace thermoloop;
using namespace thermoloop::mpc;
using testing_support::QuadraticSurrogate;

namespace {

std::vector<std::mt19937_64> streams(std::size_t n, std::uint64_t seed) {
  std::vector<std::mt19937_64> r;
  for (std::size_t p = 0; p < n; ++p) r.emplace_back(derive_seed(seed, p));
  return r;
}

// Predicts T_max + 1 whenever the first current is positive, else the setpoint.
class HotWhenPositive final : public ConditionedPredictor {
 public:
  explicit HotWhenPositive(const MpcConfig& c) : cfg_(c) {}
  void predict(std::span<const double> currents, std::size_t batch, std::span<double> temps) const override {
    const std::size_t m = cfg_.horizon;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t l = 0; l < m; ++l)
        temps[b * m + l] = currents[b * m] > 0 ? cfg_.temp_bounds.hi + 1.0 : cfg_.setpoint;
  }

 private:
  MpcConfig cfg_;
};

}  // namespace

TEST_SUITE("mpc") {
  TEST_CASE("cost arithmetic") {
    MpcConfig c;
    const std::vector<double> ref(5, c.setpoint), hot(5, c.setpoint + 1.0);
    const std::vector<double> flat(5, 0.3), alt{1, 0, 1, 0, 1};
    CHECK(cost(ref, flat, 0.3, c) == 0.0);
    CHECK(cost(hot, flat, 0.3, c) == 5.0);
    CHECK(cost(ref, alt, 0.0, c) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK_THROWS_AS(cost(ref, std::vector<double>(4, 0.0), 0.0, c), SizingError);
  }

  TEST_CASE("swarm initialisation") {
    MpcConfig c;
    c.swarm_size = 50;
    auto r = streams(50, 3);
    const auto s = init_swarm(c, r);
    for (const auto& p : s.particles) {
      REQUIRE(p.position.size() == 5);
      for (std::size_t d = 0; d < 5; ++d) {
        CHECK(c.current_bounds.contains(p.position[d]));
        CHECK(std::abs(p.velocity[d]) <= 0.4);
      }
      CHECK(std::isinf(p.best_cost));
    }
    const std::vector<double> warm{0.1, 0.2, 0.3, 0.4, 9.0};
    auto r2 = streams(50, 3);
    const auto w = init_swarm(c, r2, &warm);
    CHECK(w.particles[0].position == std::vector<double>{0.1, 0.2, 0.3, 0.4, 2.0});
    CHECK(w.particles[1].position == s.particles[1].position);
  }

  TEST_CASE("pso update properties") {
    MpcConfig c;
    c.swarm_size = 20;
    auto r = streams(20, 1);
    auto s = init_swarm(c, r);
    std::vector<double> costs(20);
    for (std::size_t p = 0; p < 20; ++p) costs[p] = static_cast<double>(p);
    record_costs(s, costs);
    CHECK(s.global_best_cost == 0.0);
    CHECK(s.global_best_position == s.particles[0].position);

    // Frozen dynamics.
    auto frozen = s;
    MpcConfig z = c;
    z.inertia = z.cognitive = z.social = 0.0;
    const auto before = frozen.particles[5].position;
    pso_update(frozen, z, r);
    CHECK(frozen.particles[5].position == before);
    CHECK(frozen.particles[5].velocity == std::vector<double>(5, 0.0));

    // Particle 0 sits on both bests: with w = 0 it does not move.
    auto still = s;
    MpcConfig w0 = c;
    w0.inertia = 0.0;
    pso_update(still, w0, r);
    CHECK(still.particles[0].velocity == std::vector<double>(5, 0.0));

    // Large steps are clamped exactly to the box.
    auto wild = s;
    for (auto& p : wild.particles) p.velocity.assign(5, 100.0);
    MpcConfig inert = c;
    inert.cognitive = inert.social = 0.0;
    inert.inertia = 1.0;
    pso_update(wild, inert, r);
    for (const auto& p : wild.particles) CHECK(p.position == std::vector<double>(5, 2.0));

    // Strict improvement only: an equal cost does not move the best.
    auto tie = s;
    tie.particles[3].position.assign(5, 1.0);
    auto tc = costs;
    record_costs(tie, tc);
    CHECK(tie.particles[3].best_position == s.particles[3].best_position);
  }

  TEST_CASE("candidate scoring and the safety penalty") {
    MpcConfig c;
    c.swarm_size = 6;
    c.jobs = 3;
    auto r = streams(6, 2);
    auto s = init_swarm(c, r);
    for (std::size_t p = 0; p < 6; ++p) s.particles[p].position.assign(5, p % 2 ? 0.5 : -0.5);
    const HotWhenPositive pred(c);
    auto costs = evaluate_candidates(pred, s, 0.0, c);
    const std::vector<double> ref(5, c.setpoint);
    for (std::size_t p = 0; p < 6; ++p) {
      if (p % 2) CHECK(costs[p] == kPenaltySentinel);
      else CHECK(costs[p] == cost(ref, s.particles[p].position, 0.0, c));
    }
    for (auto& p : s.particles) p.best_cost = 7.0;
    costs = evaluate_candidates(pred, s, 0.0, c);
    CHECK(costs[1] == 8.0);
    CHECK(costs[0] == cost(ref, s.particles[0].position, 0.0, c));
    // Identical positions, identical costs.
    CHECK(costs[0] == costs[2]);
    CHECK(costs[1] == costs[3]);
  }

  TEST_CASE("solve finds the analytic optimum of a convex surrogate") {
    MpcConfig c;
    const std::vector<double> target{0.4, -0.7, 1.1, 0.2, -1.3};
    const QuadraticSurrogate q(target, c.setpoint, 1.0);
    const auto opt = testing_support::quadratic_optimum(target, 1.0, c.control_cost_weight, 0.1);
    const std::vector<double> hist{300.0};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto res = solve(hist, 0.1, q, c, seed);
      for (std::size_t l = 0; l < 5; ++l) CHECK(std::abs(res.sequence[l] - opt[l]) < 0.02);
      const auto& h = res.diagnostics.best_cost_per_iteration;
      REQUIRE(h.size() == 30);
      for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
      CHECK(res.best_cost == h.back());
    }
  }

  TEST_CASE("solve: determinism, threads, degenerate box") {
    MpcConfig c;
    const QuadraticSurrogate q({0.4, -0.7, 1.1, 0.2, -1.3}, c.setpoint, 1.0);
    const std::vector<double> hist{300.0};
    const auto a = solve(hist, 0.0, q, c, 42);
    c.jobs = 4;
    const auto b = solve(hist, 0.0, q, c, 42);
    CHECK(a.sequence == b.sequence);
    CHECK(a.diagnostics.best_cost_per_iteration == b.diagnostics.best_cost_per_iteration);

    c.current_bounds = {0.75, 0.75};
    const auto d = solve(hist, 0.0, q, c, 1);
    CHECK(d.sequence == std::vector<double>(5, 0.75));

    MpcConfig wrong;
    wrong.horizon = 4;
    CHECK_THROWS_AS(solve(hist, 0.0, q, wrong, 1), ConfigError);
    MpcConfig budget;
    budget.enforce_budget = true;
    budget.solve_budget = 1e-12;
    const auto e = solve(hist, 0.0, q, budget, 1);
    CHECK(e.diagnostics.over_budget);
    CHECK(e.diagnostics.iterations_run == 1);
    CHECK(e.sequence.size() == 5);
  }

  TEST_CASE("linear baseline recurrence") {
    const LinearModel lm;
    const double zero_c = celsius_to_kelvin(0.0);
    const auto z = linear_predict(zero_c, std::vector<double>(5, 0.0), lm);
    for (double v : z) CHECK(v == doctest::Approx(zero_c).epsilon(1e-15));
    const auto one = linear_predict(celsius_to_kelvin(1.0), std::vector<double>(5, 0.0), lm);
    for (std::size_t l = 0; l < 5; ++l)
      CHECK(kelvin_to_celsius(one[l]) == doctest::Approx(std::pow(0.988, l + 1)).epsilon(1e-12));
    const auto pulse = linear_predict(zero_c, std::vector<double>{1, 0, 0, 0, 0}, lm);
    for (std::size_t l = 0; l < 5; ++l)
      CHECK(kelvin_to_celsius(pulse[l]) == doctest::Approx(0.028 * std::pow(0.988, l)).epsilon(1e-9));
  }

  TEST_CASE("linear fit recovers generating coefficients") {
    const LinearModel truth{0.05, 0.97};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<datagen::SampleWindow> w(50);
    for (auto& x : w) {
      x.history_temps = {celsius_to_kelvin(20 + u(rng))};
      for (int l = 0; l < 5; ++l) x.control_currents.push_back(u(rng));
      x.target_temps = linear_predict(x.history_temps.back(), x.control_currents, truth);
    }
    std::vector<std::size_t> idx(50);
    for (std::size_t i = 0; i < 50; ++i) idx[i] = i;
    const auto fit = fit_linear_model(w, idx);
    CHECK(fit.gain == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(fit.decay == doctest::Approx(0.97).epsilon(1e-9));
  }

  TEST_CASE("physics predictor follows the unloaded plant") {
    plant::PlantConfig cfg;
    cfg.laser_power = 0.0;
    cfg.sensor_noise_std = 0.0;
    const std::vector<double> I{0.5, -1.0, 1.5, 0.0, -0.3};
    const auto traj = plant::simulate({296.0, 0}, I, cfg, 1);
    const PhysicsPredictor pp(cfg.constants, 0.0, 0.2, 10, 5);
    const auto pred = pp.predict_one(std::vector<double>{296.0}, I);
    for (std::size_t l = 0; l < 5; ++l) CHECK(pred[l] == doctest::Approx(traj[l].temp_true).epsilon(1e-14));
  }

  TEST_CASE("config keys") {
    MpcConfig c;
    c.swarm_size = 40;
    c.enforce_budget = true;
    KeyValueConfig kv;
    write_mpc_config(kv, c);
    const auto back = mpc_config_from(kv);
    CHECK(back.swarm_size == 40);
    CHECK(back.enforce_budget);
    CHECK_THROWS_AS(mpc_config_from(KeyValueConfig::parse("mpc.swarm = 3\n")), ConfigError);
    CHECK_THROWS_AS(mpc_config_from(KeyValueConfig::parse("mpc.iterations = 0\n")), ConfigError);
  }
}
