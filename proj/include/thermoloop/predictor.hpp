// SPDX-License-Identifier: Apache-2.0
#pragma once

// Temperature predictors the controller can optimise against. All work in
// physical units: history and predictions in K, currents in A.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "thermoloop/checkpoint.hpp"
#include "thermoloop/datagen.hpp"
#include "thermoloop/plant.hpp"

namespace thermoloop::mpc {

/// A predictor bound to one history; evaluates many candidate sequences.
/// predict() must be safe to call concurrently.
class ConditionedPredictor {
 public:
  virtual ~ConditionedPredictor() = default;
  /// currents: batch x m (A, row-major); temps: batch x m (K).
  virtual void predict(std::span<const double> currents, std::size_t batch,
                       std::span<double> temps) const = 0;
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  /// Samples of history the predictor consumes (the most recent ones).
  virtual std::size_t history_len() const = 0;
  virtual std::size_t horizon() const = 0;
  /// `history` holds at least history_len() samples, oldest first.
  virtual std::unique_ptr<ConditionedPredictor> condition(std::span<const double> history) const = 0;

  std::vector<double> predict_one(std::span<const double> history, std::span<const double> currents) const;
};

/// Trained recurrent model; normalizes at its boundary.
class NeuralPredictor final : public Predictor {
 public:
  explicit NeuralPredictor(Checkpoint ckpt, std::string label = "pigru");
  std::string name() const override { return label_; }
  std::size_t history_len() const override { return ckpt_.dims.history_len; }
  std::size_t horizon() const override { return ckpt_.dims.horizon; }
  std::unique_ptr<ConditionedPredictor> condition(std::span<const double> history) const override;
  const Checkpoint& checkpoint() const { return ckpt_; }

 private:
  Checkpoint ckpt_;
  std::string label_;
};

/// T(k) = gain * I(k) + decay * T(k-1) with T in degC.
struct LinearModel {
  double gain = 0.028;   // degC / A
  double decay = 0.988;

  bool operator==(const LinearModel&) const = default;
};

/// Iterates the recurrence m = currents.size() times from `last_temp` (K).
std::vector<double> linear_predict(double last_temp, std::span<const double> currents,
                                   const LinearModel& model);

/// Least-squares (gain, decay) over every consecutive pair in the windows:
/// each target against its control and the preceding temperature.
LinearModel fit_linear_model(std::span<const datagen::SampleWindow> windows,
                             std::span<const std::size_t> indices);

class LinearPredictor final : public Predictor {
 public:
  LinearPredictor(LinearModel model, std::size_t horizon);
  std::string name() const override { return "linear"; }
  std::size_t history_len() const override { return 1; }
  std::size_t horizon() const override { return horizon_; }
  std::unique_ptr<ConditionedPredictor> condition(std::span<const double> history) const override;
  const LinearModel& model() const { return model_; }

 private:
  LinearModel model_;
  std::size_t horizon_;
};

/// Euler rollout of the lumped model from the last sample with a fixed
/// assumed heat load. With load 0 it is the model the physics loss encodes.
class PhysicsPredictor final : public Predictor {
 public:
  PhysicsPredictor(plant::PhysicalConstants constants, double assumed_load, double sample_period,
                   int substeps, std::size_t horizon);
  std::string name() const override { return "physics"; }
  std::size_t history_len() const override { return 1; }
  std::size_t horizon() const override { return horizon_; }
  std::unique_ptr<ConditionedPredictor> condition(std::span<const double> history) const override;

 private:
  plant::PhysicalConstants constants_;
  double load_;
  double sample_period_;
  int substeps_;
  std::size_t horizon_;
};

}  // namespace thermoloop::mpc
