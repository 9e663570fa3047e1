// SPDX-License-Identifier: Apache-2.0
#pragma once

// Joint data + physics training of the recurrent predictor.
//
//   total = (1 - lambda_eff) * data + lambda_eff * physics
//
// `data` is the mean squared error in normalized units. `physics` is the
// squared residual of the discretised thermal balance evaluated on the
// denormalized predictions (K/s)^2, summed over steps 2..m and divided by
// B * m. lambda_eff ramps linearly from 0 over the first epochs.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "thermoloop/datagen.hpp"
#include "thermoloop/kv_config.hpp"
#include "thermoloop/normalization.hpp"
#include "thermoloop/pigru.hpp"
#include "thermoloop/plant.hpp"

namespace thermoloop::train {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double lambda = 0.001;
  std::size_t lambda_ramp_epochs = 3;
  std::size_t lr_step_epochs = 4;
  double lr_decay = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  plant::PhysicalConstants physics;
  double sample_period = 0.2;  // s
  std::size_t jobs = 1;        // per-sample parallelism; never changes results

  double effective_lambda(std::size_t epoch) const;
  double learning_rate_at(std::size_t epoch) const;
  void validate() const;
};

struct LossReport {
  double data = 0.0;
  double physics = 0.0;
  double total = 0.0;
  double lambda_eff = 0.0;
};

/// Mean over batch x horizon of (pred - target)^2. Row-major, batch x m.
double data_loss(std::span<const double> pred, std::span<const double> target, std::size_t batch,
                 std::size_t horizon);

/// Step residual (T_l - T_{l-1})/dt - dT/dt(T_l, I_l) at zero laser load.
double physics_residual(double temp_prev, double temp, double current,
                        const plant::PhysicalConstants& c, double dt);

/// (1 / (batch * m)) * sum over samples and l = 2..m of the squared residual.
/// Temperatures in K, currents in A. Throws SizingError when m < 2.
double physics_loss(std::span<const double> pred_temps, std::span<const double> currents,
                    std::size_t batch, std::size_t horizon, const plant::PhysicalConstants& c,
                    double dt);

/// Windows flattened into normalized model inputs once, so batches are index
/// lists into contiguous arrays.
struct PreparedWindows {
  std::size_t history_len = 0;
  std::size_t horizon = 0;
  std::size_t count = 0;
  std::vector<double> history;       // count x n, normalized
  std::vector<double> currents;      // count x m, normalized
  std::vector<double> currents_raw;  // count x m, A
  std::vector<double> targets;       // count x m, normalized

  static PreparedWindows from(std::span<const datagen::SampleWindow> windows,
                              std::span<const std::size_t> indices, const Normalization& norm);

  std::span<const double> history_of(std::size_t i) const {
    return {history.data() + i * history_len, history_len};
  }
  std::span<const double> currents_of(std::size_t i) const {
    return {currents.data() + i * horizon, horizon};
  }
  std::span<const double> raw_currents_of(std::size_t i) const {
    return {currents_raw.data() + i * horizon, horizon};
  }
  std::span<const double> targets_of(std::size_t i) const {
    return {targets.data() + i * horizon, horizon};
  }
};

struct Model {
  pigru::ModelDims dims;
  Normalization normalization;
  pigru::ModelParams params;
};

LossReport total_loss(const PreparedWindows& data, std::span<const std::size_t> batch,
                      const Model& model, const TrainConfig& cfg, std::size_t epoch);

struct GradientResult {
  LossReport loss;
  pigru::ModelParams grads;
};

/// Exact gradient of total_loss. Per-sample passes may run on cfg.jobs
/// threads; their contributions are summed in batch order. Throws
/// NumericFault naming the tensor on a non-finite gradient.
GradientResult gradients(const PreparedWindows& data, std::span<const std::size_t> batch,
                         const Model& model, const TrainConfig& cfg, std::size_t epoch);

struct AdamState {
  pigru::ModelParams first_moment;
  pigru::ModelParams second_moment;
  std::uint64_t timestep = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const pigru::ModelDims& dims, double beta1 = 0.9,
                              double beta2 = 0.999, double epsilon = 1e-8);
};

/// Bias-corrected Adam update in place.
void adam_step(pigru::ModelParams& params, const pigru::ModelParams& grads, AdamState& state,
               double learning_rate);

struct BatchLog {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  LossReport loss;
  double learning_rate = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  LossReport train;                 // batch-mean of the epoch
  double validation_data_loss = 0.0;  // NaN when there is no validation split
  double learning_rate = 0.0;
};

struct FitResult {
  Model model;
  std::vector<BatchLog> batches;
  std::vector<EpochLog> epochs;
  double initial_validation_data_loss = 0.0;
};

/// Full training loop. Windows are permuted every epoch, LR decays stepwise.
/// A non-finite loss aborts with a NumericFault naming epoch and batch.
FitResult fit(const datagen::Dataset& dataset, const pigru::ModelDims& dims, const TrainConfig& cfg);

/// Mean normalized data loss of `model` over all windows in `data`.
double evaluate_data_loss(const PreparedWindows& data, const Model& model, std::size_t jobs = 1);

/// `epoch,batch,data_loss,physics_loss,total,lr,lambda_eff`
std::string training_log_csv(std::span<const BatchLog> rows);
/// `epoch,train_data_loss,train_physics_loss,train_total,val_data_loss,lr,lambda_eff`
std::string epoch_log_csv(std::span<const EpochLog> rows);

// `train.` and `model.` keys of a flat config.
TrainConfig train_config_from(const KeyValueConfig& kv, TrainConfig base = {});
void write_train_config(KeyValueConfig& kv, const TrainConfig& cfg);
pigru::ModelDims model_dims_from(const KeyValueConfig& kv, pigru::ModelDims base = {});
void write_model_dims(KeyValueConfig& kv, const pigru::ModelDims& dims);

}  // namespace thermoloop::train
