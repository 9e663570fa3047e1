// SPDX-License-Identifier: Apache-2.0
#pragma once

// Encoder-decoder predictor of the next `horizon` temperatures.
//
//   history (n scalars) --GRU--> h_T (gru_hidden)
//   currents (m scalars) --dense+ReLU--dense--> h_I (ctrl_hidden)
//   [h_T ; h_I] --affine--> m predictions
//
// Everything here works in normalized units; see normalization.hpp.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace thermoloop::pigru {

struct ModelDims {
  std::size_t history_len = 100;
  std::size_t horizon = 5;
  std::size_t gru_hidden = 32;
  std::size_t ctrl_hidden = 16;

  std::size_t features() const { return gru_hidden + ctrl_hidden; }
  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

/// Row-major matrix; vectors are single-column.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
  std::span<double> span() { return data; }
  std::span<const double> span() const { return data; }
  bool operator==(const Tensor&) const = default;
};

struct ModelParams {
  // GRU update gate: sigma(in * x + rec * h + bias)
  Tensor update_in, update_rec, update_bias;
  // GRU reset gate
  Tensor reset_in, reset_rec, reset_bias;
  // GRU candidate: tanh(in * x + rec * (r .* h) + bias)
  Tensor cand_in, cand_rec, cand_bias;
  // control encoder
  Tensor ctrl1_weight, ctrl1_bias, ctrl2_weight, ctrl2_bias;
  // decoder over [h_T ; h_I]
  Tensor out_weight, out_bias;

  static ModelParams zeros(const ModelDims& dims);
  /// Weights uniform in +-1/sqrt(cols) per matrix, biases zero.
  static ModelParams initialized(const ModelDims& dims, std::uint64_t seed);

  /// Throws ConfigError on any shape mismatch, NumericFault on non-finite entries.
  void check(const ModelDims& dims) const;
  /// Shapes only; cheap enough for every forward pass.
  void check_shapes(const ModelDims& dims) const;
  std::size_t parameter_count() const;

  static constexpr std::size_t kTensorCount = 15;
  static const std::array<std::string_view, kTensorCount>& tensor_names();

  std::array<Tensor*, kTensorCount> tensors() {
    return {&update_in, &update_rec, &update_bias, &reset_in,    &reset_rec,
            &reset_bias, &cand_in,   &cand_rec,    &cand_bias,   &ctrl1_weight,
            &ctrl1_bias, &ctrl2_weight, &ctrl2_bias, &out_weight, &out_bias};
  }
  std::array<const Tensor*, kTensorCount> tensors() const {
    return {&update_in, &update_rec, &update_bias, &reset_in,    &reset_rec,
            &reset_bias, &cand_in,   &cand_rec,    &cand_bias,   &ctrl1_weight,
            &ctrl1_bias, &ctrl2_weight, &ctrl2_bias, &out_weight, &out_bias};
  }

  template <class F>
  void for_each(F&& f) {
    const auto ts = tensors();
    for (std::size_t i = 0; i < kTensorCount; ++i) f(tensor_names()[i], *ts[i]);
  }
  template <class F>
  void for_each(F&& f) const {
    const auto ts = tensors();
    for (std::size_t i = 0; i < kTensorCount; ++i) f(tensor_names()[i], *ts[i]);
  }

  bool operator==(const ModelParams&) const = default;
};

/// Gate activations of one recurrent step; kept for the reverse pass.
struct GruStep {
  std::vector<double> update;     // z
  std::vector<double> reset;      // r
  std::vector<double> candidate;  // h~
  std::vector<double> hidden;     // h
};

GruStep gru_cell(double x, std::span<const double> h_prev, const ModelParams& params);

/// Folds gru_cell over `history` from a zero state; returns the final state.
std::vector<double> encode_history(std::span<const double> history, const ModelParams& params);

std::vector<double> encode_control(std::span<const double> currents, const ModelParams& params);

struct PredictorInput {
  std::vector<double> history_temps;     // n, normalized
  std::vector<double> control_currents;  // m, normalized
};

/// Throws NumericFault naming the layer if any activation is non-finite.
std::vector<double> predict(const PredictorInput& input, const ModelParams& params,
                            const ModelDims& dims);

/// Forward record for one sample, sufficient for exact gradients.
struct Tape {
  std::vector<double> hidden;     // (n + 1) x H, row 0 is the zero state
  std::vector<double> update;     // n x H
  std::vector<double> reset;      // n x H
  std::vector<double> candidate;  // n x H
  std::vector<double> ctrl_pre;   // C, before ReLU
  std::vector<double> ctrl_act;   // C, after ReLU
  std::vector<double> features;   // H + C
  std::vector<double> output;     // m
};

void forward(const ModelParams& params, const ModelDims& dims, std::span<const double> history,
             std::span<const double> currents, Tape& tape);

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
void backward(const ModelParams& params, const ModelDims& dims, std::span<const double> history,
              std::span<const double> currents, const Tape& tape,
              std::span<const double> d_output, ModelParams& grads);

/// Predictor specialised to one history: the recurrent encoding and its
/// decoder contribution are computed once, after which candidate control
/// sequences are evaluated in batches through the dense layers only.
class HistoryConditioned {
 public:
  HistoryConditioned(const ModelParams& params, const ModelDims& dims,
                     std::span<const double> history);

  /// currents: batch x m (normalized, row-major); out: batch x m.
  void predict(std::span<const double> currents, std::size_t batch, std::span<double> out) const;

  std::span<const double> history_encoding() const { return h_history_; }

 private:
  ModelDims dims_;
  std::vector<double> h_history_;
  std::vector<double> base_;      // out_bias + out_weight[:, :H] h_T
  std::vector<double> ctrl1_t_;   // m x C
  std::vector<double> ctrl1_bias_;
  std::vector<double> ctrl2_t_;   // C x C
  std::vector<double> ctrl2_bias_;
  std::vector<double> out_ctrl_t_;  // C x m
};

}  // namespace thermoloop::pigru
