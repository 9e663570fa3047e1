// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/plant.hpp"

#include <cmath>
#include <string>

#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"

namespace thermoloop::plant {
namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(std::string(name) + " must be finite and strictly positive, got " + format_double(v));
}

void require_bounds(const Bounds& b, const char* name) {
  if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi)
    throw ConfigError(std::string(name) + " must satisfy lo <= hi");
}

}  // namespace

void PhysicalConstants::validate() const {
  require_positive(seebeck, "seebeck");
  require_positive(internal_resistance, "internal_resistance");
  require_positive(heat_transfer, "heat_transfer");
  require_positive(hot_side_temp, "hot_side_temp");
  require_positive(equiv_mass, "equiv_mass");
  require_positive(heat_capacity, "heat_capacity");
}

void PlantConfig::validate() const {
  constants.validate();
  if (!(laser_power >= 0.0) || !std::isfinite(laser_power)) throw ConfigError("laser_power must be >= 0");
  if (!(heat_load_efficiency >= 0.0) || !std::isfinite(heat_load_efficiency))
    throw ConfigError("heat_load_efficiency must be >= 0");
  if (!(sensor_noise_std >= 0.0) || !std::isfinite(sensor_noise_std))
    throw ConfigError("sensor_noise_std must be >= 0");
  require_positive(sample_period, "sample_period");
  if (substeps_per_sample < 1) throw ConfigError("substeps_per_sample must be >= 1");
  require_bounds(temp_bounds, "temp_bounds");
  require_bounds(current_bounds, "current_bounds");
  require_bounds(guard_band, "guard_band");
  if (guard_band.lo > temp_bounds.lo || guard_band.hi < temp_bounds.hi)
    throw ConfigError("guard_band must contain temp_bounds");
}

HeatTerms heat_terms(const PlantState& state, double current, const PlantConfig& cfg) {
  if (!std::isfinite(state.cold_side_temp) || !std::isfinite(current))
    throw InvalidInputError("heat_terms: non-finite temperature or current");
  const auto& c = cfg.constants;
  return HeatTerms{
      .peltier = c.seebeck * current * state.cold_side_temp,
      .joule = 0.5 * current * current * c.internal_resistance,
      .conduction = c.heat_transfer * (c.hot_side_temp - state.cold_side_temp),
      .laser_load = cfg.laser_load(),
  };
}

double temperature_rate(double temp, double current, const PhysicalConstants& c, double load) {
  const double q = c.seebeck * current * temp - 0.5 * current * current * c.internal_resistance +
                   c.heat_transfer * (c.hot_side_temp - temp) + load;
  return q / c.thermal_mass();
}

StepResult step(const PlantState& state, double current, const PlantConfig& cfg, Rng& rng) {
  if (!std::isfinite(current) || !cfg.current_bounds.contains(current))
    throw InvalidInputError("plant step: current " + format_double(current) + " A outside [" +
                            format_double(cfg.current_bounds.lo) + ", " +
                            format_double(cfg.current_bounds.hi) + "] A");
  if (!std::isfinite(state.cold_side_temp))
    throw InvalidInputError("plant step: non-finite temperature");

  const double dt = cfg.substep();
  const double load = cfg.laser_load();
  double temp = state.cold_side_temp;
  for (int s = 0; s < cfg.substeps_per_sample; ++s) {
    temp += dt * temperature_rate(temp, current, cfg.constants, load);
    if (!std::isfinite(temp) || !cfg.guard_band.contains(temp))
      throw DivergenceError("plant diverged at t=" + format_double(state.time + (s + 1) * dt) +
                            " s with current " + format_double(current) + " A (T=" +
                            format_double(temp) + " K)");
  }

  StepResult out;
  out.state = PlantState{temp, state.time + cfg.sample_period};
  out.measured_temp = temp;
  if (cfg.sensor_noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.sensor_noise_std);
    out.measured_temp += noise(rng);
  }
  return out;
}

std::vector<Sample> simulate(const PlantState& initial, std::span<const double> currents,
                             const PlantConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(currents.size());
  PlantState state = initial;
  for (std::size_t i = 0; i < currents.size(); ++i) {
    StepResult r;
    try {
      r = step(state, currents[i], cfg, rng);
    } catch (const DivergenceError& e) {
      throw DivergenceError("simulate: sample " + std::to_string(i) + ": " + e.what());
    } catch (const InvalidInputError& e) {
      throw InvalidInputError("simulate: sample " + std::to_string(i) + ": " + e.what());
    }
    state = r.state;
    out.push_back(Sample{state.time, currents[i], state.cold_side_temp, r.measured_temp});
  }
  return out;
}

std::optional<double> equilibrium_current(double temp, const PhysicalConstants& c, double load,
                                          Bounds current_bounds) {
  // R/2 I^2 - S T I - (K (T_h - T) + load) = 0
  const double a = 0.5 * c.internal_resistance;
  const double b = -c.seebeck * temp;
  const double q = c.heat_transfer * (c.hot_side_temp - temp) + load;
  const double disc = b * b + 4.0 * a * q;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double r1 = (-b + sq) / (2.0 * a);
  const double r2 = (-b - sq) / (2.0 * a);
  const double small = std::abs(r1) <= std::abs(r2) ? r1 : r2;
  const double large = std::abs(r1) <= std::abs(r2) ? r2 : r1;
  if (current_bounds.contains(small)) return small;
  if (current_bounds.contains(large)) return large;
  return std::nullopt;
}

std::optional<double> equilibrium_current(double temp, const PlantConfig& cfg) {
  return equilibrium_current(temp, cfg.constants, cfg.laser_load(), cfg.current_bounds);
}

PlantConfig plant_config_from(const KeyValueConfig& kv, PlantConfig base) {
  static const std::vector<std::string_view> known = {
      "seebeck_V_per_K", "internal_resistance_ohm", "heat_transfer_W_per_K", "hot_side_temp_K",
      "equiv_mass_kg", "heat_capacity_J_per_kgK", "laser_power_W", "heat_load_efficiency",
      "sensor_noise_std_K", "sample_period_s", "substeps_per_sample", "temp_min_K", "temp_max_K",
      "current_min_A", "current_max_A", "guard_min_K", "guard_max_K"};
  if (auto unknown = kv.unknown_keys("plant", known); !unknown.empty())
    throw ConfigError("unknown config key " + unknown.front());

  PlantConfig cfg = base;
  auto& c = cfg.constants;
  c.seebeck = kv.get_double("plant.seebeck_V_per_K", c.seebeck);
  c.internal_resistance = kv.get_double("plant.internal_resistance_ohm", c.internal_resistance);
  c.heat_transfer = kv.get_double("plant.heat_transfer_W_per_K", c.heat_transfer);
  c.hot_side_temp = kv.get_double("plant.hot_side_temp_K", c.hot_side_temp);
  c.equiv_mass = kv.get_double("plant.equiv_mass_kg", c.equiv_mass);
  c.heat_capacity = kv.get_double("plant.heat_capacity_J_per_kgK", c.heat_capacity);
  cfg.laser_power = kv.get_double("plant.laser_power_W", cfg.laser_power);
  cfg.heat_load_efficiency = kv.get_double("plant.heat_load_efficiency", cfg.heat_load_efficiency);
  cfg.sensor_noise_std = kv.get_double("plant.sensor_noise_std_K", cfg.sensor_noise_std);
  cfg.sample_period = kv.get_double("plant.sample_period_s", cfg.sample_period);
  cfg.substeps_per_sample =
      static_cast<int>(kv.get_int("plant.substeps_per_sample", cfg.substeps_per_sample));
  cfg.temp_bounds.lo = kv.get_double("plant.temp_min_K", cfg.temp_bounds.lo);
  cfg.temp_bounds.hi = kv.get_double("plant.temp_max_K", cfg.temp_bounds.hi);
  cfg.current_bounds.lo = kv.get_double("plant.current_min_A", cfg.current_bounds.lo);
  cfg.current_bounds.hi = kv.get_double("plant.current_max_A", cfg.current_bounds.hi);
  cfg.guard_band.lo = kv.get_double("plant.guard_min_K", cfg.guard_band.lo);
  cfg.guard_band.hi = kv.get_double("plant.guard_max_K", cfg.guard_band.hi);
  cfg.validate();
  return cfg;
}

void write_plant_config(KeyValueConfig& kv, const PlantConfig& cfg) {
  const auto& c = cfg.constants;
  kv.set("plant.seebeck_V_per_K", format_double(c.seebeck));
  kv.set("plant.internal_resistance_ohm", format_double(c.internal_resistance));
  kv.set("plant.heat_transfer_W_per_K", format_double(c.heat_transfer));
  kv.set("plant.hot_side_temp_K", format_double(c.hot_side_temp));
  kv.set("plant.equiv_mass_kg", format_double(c.equiv_mass));
  kv.set("plant.heat_capacity_J_per_kgK", format_double(c.heat_capacity));
  kv.set("plant.laser_power_W", format_double(cfg.laser_power));
  kv.set("plant.heat_load_efficiency", format_double(cfg.heat_load_efficiency));
  kv.set("plant.sensor_noise_std_K", format_double(cfg.sensor_noise_std));
  kv.set("plant.sample_period_s", format_double(cfg.sample_period));
  kv.set("plant.substeps_per_sample", std::to_string(cfg.substeps_per_sample));
  kv.set("plant.temp_min_K", format_double(cfg.temp_bounds.lo));
  kv.set("plant.temp_max_K", format_double(cfg.temp_bounds.hi));
  kv.set("plant.current_min_A", format_double(cfg.current_bounds.lo));
  kv.set("plant.current_max_A", format_double(cfg.current_bounds.hi));
  kv.set("plant.guard_min_K", format_double(cfg.guard_band.lo));
  kv.set("plant.guard_max_K", format_double(cfg.guard_band.hi));
}

std::string trajectory_csv(std::span<const Sample> samples) {
  std::string out = "time_s,current_A,temp_true_K,temp_meas_K\n";
  out.reserve(out.size() + samples.size() * 64);
  for (const auto& s : samples) {
    append_double(out, s.time);
    out += ',';
    append_double(out, s.current);
    out += ',';
    append_double(out, s.temp_true);
    out += ',';
    append_double(out, s.temp_meas);
    out += '\n';
  }
  return out;
}

}  // namespace thermoloop::plant
