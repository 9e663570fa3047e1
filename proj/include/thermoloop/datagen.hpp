// SPDX-License-Identifier: Apache-2.0
#pragma once

// Open-loop excitation datasets: random piecewise-constant TEC current per
// laser power level, simulated on the plant and cut into overlapping
// (history, control, target) windows.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "thermoloop/normalization.hpp"
#include "thermoloop/plant.hpp"

namespace thermoloop::datagen {

struct ExcitationSpec {
  double duration = 20000.0;  // s, total across all power levels
  Bounds current_range{-2.0, 2.0};
  Bounds update_freq_range{0.05, 5.0};  // Hz
  std::vector<double> power_levels{0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60};
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ExcitationSpec&) const = default;
};

/// Current sequence of `duration` seconds at `sample_period`: each value is
/// held for round(1/(f * sample_period)) samples (at least one), f uniform
/// in update_freq_range, values uniform in current_range.
std::vector<double> generate_excitation(const ExcitationSpec& spec, double sample_period = 0.2);

/// Explicit-length variant used per power level.
std::vector<double> generate_excitation(const ExcitationSpec& spec, std::size_t samples,
                                        double sample_period, std::uint64_t seed);

struct SampleWindow {
  std::vector<double> history_temps;     // n, K
  std::vector<double> control_currents;  // m, A
  std::vector<double> target_temps;      // m, K

  bool operator==(const SampleWindow&) const = default;
};

/// Window k covers samples [k*stride, k*stride + n + m): the first n
/// temperatures are history, the next m are targets, and the currents that
/// produced those targets are the controls.
std::vector<SampleWindow> window_trajectory(std::span<const double> temps,
                                            std::span<const double> currents, std::size_t n,
                                            std::size_t m, std::size_t stride);


/// Provenance of one simulated power level. Its windows are stored
/// contiguously: `train_windows` training windows, then `validation_windows`
/// validation windows. Windows overlapping both blocks are dropped.
struct TrajectoryInfo {
  double power = 0.0;
  std::size_t samples = 0;  // after truncation
  bool truncated = false;   // left temp_bounds and was cut
  std::size_t train_windows = 0;
  std::size_t validation_windows = 0;

  bool operator==(const TrajectoryInfo&) const = default;
};

struct Dataset {
  std::size_t history_len = 100;
  std::size_t horizon = 5;
  std::size_t stride = 1;
  std::vector<SampleWindow> windows;
  Normalization normalization;
  ExcitationSpec spec;
  std::vector<TrajectoryInfo> trajectories;

  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> validation_indices() const;
  bool operator==(const Dataset&) const = default;
};

struct BuildOptions {
  std::size_t history_len = 100;
  std::size_t horizon = 5;
  std::size_t stride = 1;
  double validation_fraction = 0.1;
  std::size_t jobs = 1;
};

Dataset build_dataset(const ExcitationSpec& spec, const plant::PlantConfig& plant_cfg,
                      const BuildOptions& options = {});

/// Mean and population std of all temperatures in the given windows;
/// current_scale is the largest |bound| of the current range.
Normalization compute_normalization(std::span<const SampleWindow> windows,
                                    std::span<const std::size_t> indices, Bounds current_range);

// On disk: <dir>/dataset.csv (window_id,role,idx,value) and
// <dir>/dataset.meta.json (normalization, spec echo, provenance).
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// `excitation.` keys of a flat config.
ExcitationSpec excitation_spec_from(const KeyValueConfig& kv, ExcitationSpec base = {});
void write_excitation_spec(KeyValueConfig& kv, const ExcitationSpec& spec);

}  // namespace thermoloop::datagen
