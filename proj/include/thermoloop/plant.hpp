// SPDX-License-Identifier: Apache-2.0
#pragma once

// Lumped-parameter thermal model of a TEC-stabilised tapered amplifier.
//
// One thermal node (the TEC cold side carrying the TA chip) of capacity
// m_e * c exchanges heat with a fixed hot side T_h:
//
//   m_e c dT/dt = S I T  -  I^2 R / 2  +  K (T_h - T)  +  Q_L
//
// Q_L = eta * P is the heat the amplifier deposits at optical power P. It is
// the disturbance the learned predictors never see explicitly. With the
// default constants |I^2 R / 2| dominates S I T, so drive current of either
// sign removes heat; conduction pulls T toward T_h and the laser load warms
// the node.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "thermoloop/kv_config.hpp"
#include "thermoloop/units.hpp"

namespace thermoloop::plant {

struct PhysicalConstants {
  double seebeck = 8.76e-4;           // V/K
  double internal_resistance = 6.09;  // ohm
  double heat_transfer = 0.373;       // W/K
  double hot_side_temp = 300.15;      // K (27 degC)
  double equiv_mass = 0.3;            // kg
  double heat_capacity = 800.0;       // J/(kg K)

  double thermal_mass() const { return equiv_mass * heat_capacity; }
  void validate() const;
};

struct PlantConfig {
  PhysicalConstants constants;
  double laser_power = 0.5;           // W (optical)
  double heat_load_efficiency = 3.0;  // W of heat per W of optical power
  double sensor_noise_std = 0.5e-3;   // K
  double sample_period = 0.2;         // s
  int substeps_per_sample = 10;
  Bounds temp_bounds{278.15, 313.15};     // K, safe operating envelope
  Bounds current_bounds{-2.0, 2.0};       // A
  Bounds guard_band{173.15, 473.15};      // K, leaving it is a divergence

  double laser_load() const { return heat_load_efficiency * laser_power; }
  double substep() const { return sample_period / substeps_per_sample; }
  void validate() const;
};

struct PlantState {
  double cold_side_temp = 300.15;  // K
  double time = 0.0;               // s
};

struct HeatTerms {
  double peltier = 0.0;     // S I T_c
  double joule = 0.0;       // I^2 R / 2
  double conduction = 0.0;  // K (T_h - T_c)
  double laser_load = 0.0;  // eta P

  /// Net heat flow into the cold-side node, W.
  double net() const { return peltier - joule + conduction + laser_load; }
};

HeatTerms heat_terms(const PlantState& state, double current, const PlantConfig& cfg);

/// dT/dt in K/s for the given node temperature, current and extra heat load.
double temperature_rate(double temp, double current, const PhysicalConstants& c, double load);

/// Result of one sample period: the true internal state and the noisy
/// reading reported by the sensor.
struct StepResult {
  PlantState state;
  double measured_temp = 0.0;
};

using Rng = std::mt19937_64;

StepResult step(const PlantState& state, double current, const PlantConfig& cfg, Rng& rng);

struct Sample {
  double time = 0.0;       // s, end of the sample period
  double current = 0.0;    // A, applied during the period
  double temp_true = 0.0;  // K
  double temp_meas = 0.0;  // K
};

std::vector<Sample> simulate(const PlantState& initial, std::span<const double> currents,
                             const PlantConfig& cfg, std::uint64_t seed);

/// Current that holds `temp` stationary (net heat flow zero), choosing the
/// root of smaller magnitude. Empty if no real root exists inside the
/// configured current bounds.
std::optional<double> equilibrium_current(double temp, const PlantConfig& cfg);

/// Same with an explicit load; used by controllers that assume zero load.
std::optional<double> equilibrium_current(double temp, const PhysicalConstants& c, double load,
                                          Bounds current_bounds);

// Flat key-value persistence under the `plant.` prefix.
PlantConfig plant_config_from(const KeyValueConfig& kv, PlantConfig base = {});
void write_plant_config(KeyValueConfig& kv, const PlantConfig& cfg);

std::string trajectory_csv(std::span<const Sample> samples);

}  // namespace thermoloop::plant
