// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/pigru.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "thermoloop/error.hpp"
#include "thermoloop/simd/kernels.hpp"

namespace thermoloop::pigru {
namespace {

inline double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

void require_finite(std::span<const double> v, const char* layer) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericFault(std::string("non-finite activation in ") + layer);
}

// One recurrent step. `h_out` may not alias `h_prev`.
void gru_step(double x, const double* h_prev, const ModelParams& p, std::size_t H, double* z,
              double* r, double* c, double* h_out, double* scratch) {
  const auto& k = simd::active();
  k.gemv(p.update_rec.data.data(), H, H, h_prev, p.update_bias.data.data(), z);
  k.gemv(p.reset_rec.data.data(), H, H, h_prev, p.reset_bias.data.data(), r);
  for (std::size_t i = 0; i < H; ++i) {
    z[i] = sigmoid(z[i] + p.update_in.data[i] * x);
    r[i] = sigmoid(r[i] + p.reset_in.data[i] * x);
    scratch[i] = r[i] * h_prev[i];
  }
  k.gemv(p.cand_rec.data.data(), H, H, scratch, p.cand_bias.data.data(), c);
  for (std::size_t i = 0; i < H; ++i) {
    c[i] = std::tanh(c[i] + p.cand_in.data[i] * x);
    h_out[i] = (1.0 - z[i]) * h_prev[i] + z[i] * c[i];
  }
}

std::vector<double> transpose(const Tensor& t, std::size_t col_begin, std::size_t col_end) {
  const std::size_t cols = col_end - col_begin;
  std::vector<double> out(cols * t.rows);
  for (std::size_t r = 0; r < t.rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * t.rows + r] = t(r, col_begin + c);
  return out;
}

}  // namespace

void ModelDims::validate() const {
  if (history_len < 1 || horizon < 1 || gru_hidden < 1 || ctrl_hidden < 1)
    throw ConfigError("model dimensions must all be >= 1");
}

const std::array<std::string_view, ModelParams::kTensorCount>& ModelParams::tensor_names() {
  static const std::array<std::string_view, kTensorCount> names = {
      "update_in",  "update_rec", "update_bias", "reset_in",     "reset_rec",
      "reset_bias", "cand_in",    "cand_rec",    "cand_bias",    "ctrl1_weight",
      "ctrl1_bias", "ctrl2_weight", "ctrl2_bias", "out_weight",  "out_bias"};
  return names;
}

ModelParams ModelParams::zeros(const ModelDims& d) {
  d.validate();
  const auto H = d.gru_hidden, C = d.ctrl_hidden, m = d.horizon;
  ModelParams p;
  p.update_in = Tensor(H, 1);
  p.update_rec = Tensor(H, H);
  p.update_bias = Tensor(H, 1);
  p.reset_in = Tensor(H, 1);
  p.reset_rec = Tensor(H, H);
  p.reset_bias = Tensor(H, 1);
  p.cand_in = Tensor(H, 1);
  p.cand_rec = Tensor(H, H);
  p.cand_bias = Tensor(H, 1);
  p.ctrl1_weight = Tensor(C, m);
  p.ctrl1_bias = Tensor(C, 1);
  p.ctrl2_weight = Tensor(C, C);
  p.ctrl2_bias = Tensor(C, 1);
  p.out_weight = Tensor(m, H + C);
  p.out_bias = Tensor(m, 1);
  return p;
}

ModelParams ModelParams::initialized(const ModelDims& d, std::uint64_t seed) {
  ModelParams p = zeros(d);
  std::mt19937_64 rng(seed);
  p.for_each([&](std::string_view name, Tensor& t) {
    if (name.ends_with("_bias")) return;
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : t.data) v = u(rng);
  });
  return p;
}

void ModelParams::check_shapes(const ModelDims& d) const {
  const std::size_t H = d.gru_hidden, C = d.ctrl_hidden, m = d.horizon;
  const std::array<std::pair<std::size_t, std::size_t>, kTensorCount> shapes{{
      {H, 1}, {H, H}, {H, 1}, {H, 1}, {H, H}, {H, 1}, {H, 1}, {H, H}, {H, 1},
      {C, m}, {C, 1}, {C, C}, {C, 1}, {m, H + C}, {m, 1}}};
  const auto ts = tensors();
  for (std::size_t i = 0; i < kTensorCount; ++i) {
    const auto [r, c] = shapes[i];
    const Tensor& t = *ts[i];
    if (t.rows != r || t.cols != c || t.data.size() != r * c)
      throw ConfigError("tensor " + std::string(tensor_names()[i]) + " has shape " + std::to_string(t.rows) + "x" +
                        std::to_string(t.cols) + ", expected " + std::to_string(r) + "x" + std::to_string(c));
  }
}

void ModelParams::check(const ModelDims& d) const {
  check_shapes(d);
  for_each([&](std::string_view name, const Tensor& t) {
    for (double v : t.data)
      if (!std::isfinite(v)) throw NumericFault("tensor " + std::string(name) + " has a non-finite entry");
  });
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const Tensor& t) { n += t.size(); });
  return n;
}

GruStep gru_cell(double x, std::span<const double> h_prev, const ModelParams& p) {
  const std::size_t H = p.update_rec.rows;
  if (h_prev.size() != H || p.update_rec.cols != H || p.update_in.size() != H)
    throw ConfigError("gru_cell: hidden state has " + std::to_string(h_prev.size()) +
                      " entries, parameters expect " + std::to_string(H));
  GruStep s;
  s.update.resize(H);
  s.reset.resize(H);
  s.candidate.resize(H);
  s.hidden.resize(H);
  std::vector<double> scratch(H);
  gru_step(x, h_prev.data(), p, H, s.update.data(), s.reset.data(), s.candidate.data(),
           s.hidden.data(), scratch.data());
  return s;
}

std::vector<double> encode_history(std::span<const double> history, const ModelParams& p) {
  const std::size_t H = p.update_rec.rows;
  std::vector<double> h(H, 0.0), next(H), z(H), r(H), c(H), scratch(H);
  for (double x : history) {
    gru_step(x, h.data(), p, H, z.data(), r.data(), c.data(), next.data(), scratch.data());
    std::swap(h, next);
  }
  return h;
}

std::vector<double> encode_control(std::span<const double> currents, const ModelParams& p) {
  const std::size_t C = p.ctrl1_weight.rows;
  if (currents.size() != p.ctrl1_weight.cols)
    throw ConfigError("encode_control: " + std::to_string(currents.size()) + " currents, expected " +
                      std::to_string(p.ctrl1_weight.cols));
  std::vector<double> pre(C), out(C);
  simd::gemv(p.ctrl1_weight.span(), C, currents.size(), currents, p.ctrl1_bias.data.data(), pre);
  for (auto& v : pre) v = std::max(0.0, v);
  simd::gemv(p.ctrl2_weight.span(), C, C, pre, p.ctrl2_bias.data.data(), out);
  return out;
}

std::vector<double> predict(const PredictorInput& input, const ModelParams& p, const ModelDims& d) {
  if (input.history_temps.size() != d.history_len)
    throw ConfigError("predict: history has " + std::to_string(input.history_temps.size()) +
                      " samples, model expects " + std::to_string(d.history_len));
  if (input.control_currents.size() != d.horizon)
    throw ConfigError("predict: " + std::to_string(input.control_currents.size()) +
                      " control values, model expects " + std::to_string(d.horizon));
  p.check_shapes(d);

  const auto h_t = encode_history(input.history_temps, p);
  require_finite(h_t, "history encoder");
  const auto h_i = encode_control(input.control_currents, p);
  require_finite(h_i, "control encoder");

  std::vector<double> features(h_t);
  features.insert(features.end(), h_i.begin(), h_i.end());
  std::vector<double> out(d.horizon);
  simd::gemv(p.out_weight.span(), d.horizon, features.size(), features, p.out_bias.data.data(), out);
  require_finite(out, "decoder");
  return out;
}

void forward(const ModelParams& p, const ModelDims& d, std::span<const double> history,
             std::span<const double> currents, Tape& tape) {
  const std::size_t n = d.history_len, H = d.gru_hidden, C = d.ctrl_hidden, m = d.horizon;
  if (history.size() != n || currents.size() != m) throw ConfigError("forward: input length mismatch");
  p.check_shapes(d);
  tape.hidden.assign((n + 1) * H, 0.0);
  tape.update.resize(n * H);
  tape.reset.resize(n * H);
  tape.candidate.resize(n * H);
  std::vector<double> scratch(H);
  for (std::size_t t = 0; t < n; ++t) {
    gru_step(history[t], &tape.hidden[t * H], p, H, &tape.update[t * H], &tape.reset[t * H],
             &tape.candidate[t * H], &tape.hidden[(t + 1) * H], scratch.data());
  }

  const auto& k = simd::active();
  tape.ctrl_pre.resize(C);
  tape.ctrl_act.resize(C);
  k.gemv(p.ctrl1_weight.data.data(), C, m, currents.data(), p.ctrl1_bias.data.data(), tape.ctrl_pre.data());
  for (std::size_t i = 0; i < C; ++i) tape.ctrl_act[i] = std::max(0.0, tape.ctrl_pre[i]);

  tape.features.resize(H + C);
  std::copy_n(&tape.hidden[n * H], H, tape.features.begin());
  k.gemv(p.ctrl2_weight.data.data(), C, C, tape.ctrl_act.data(), p.ctrl2_bias.data.data(),
         tape.features.data() + H);
  tape.output.resize(m);
  k.gemv(p.out_weight.data.data(), m, H + C, tape.features.data(), p.out_bias.data.data(), tape.output.data());
}

void backward(const ModelParams& p, const ModelDims& d, std::span<const double> history,
              std::span<const double> currents, const Tape& tape, std::span<const double> d_output,
              ModelParams& g) {
  const std::size_t n = d.history_len, H = d.gru_hidden, C = d.ctrl_hidden, m = d.horizon;
  const auto& k = simd::active();

  // decoder
  k.axpy(1.0, d_output.data(), g.out_bias.data.data(), m);
  k.ger_acc(g.out_weight.data.data(), m, H + C, d_output.data(), tape.features.data());
  std::vector<double> d_features(H + C, 0.0);
  k.gemv_t_acc(p.out_weight.data.data(), m, H + C, d_output.data(), d_features.data());

  // control encoder
  const double* d_ctrl = d_features.data() + H;
  k.axpy(1.0, d_ctrl, g.ctrl2_bias.data.data(), C);
  k.ger_acc(g.ctrl2_weight.data.data(), C, C, d_ctrl, tape.ctrl_act.data());
  std::vector<double> d_pre(C, 0.0);
  k.gemv_t_acc(p.ctrl2_weight.data.data(), C, C, d_ctrl, d_pre.data());
  for (std::size_t i = 0; i < C; ++i)
    if (!(tape.ctrl_pre[i] > 0.0)) d_pre[i] = 0.0;
  k.axpy(1.0, d_pre.data(), g.ctrl1_bias.data.data(), C);
  k.ger_acc(g.ctrl1_weight.data.data(), C, m, d_pre.data(), currents.data());

  // recurrent encoder, unrolled backwards
  std::vector<double> dh(d_features.begin(), d_features.begin() + static_cast<std::ptrdiff_t>(H));
  std::vector<double> dh_prev(H), da_z(H), da_r(H), da_c(H), d_rh(H), rh(H);
  for (std::size_t t = n; t-- > 0;) {
    const double x = history[t];
    const double* h_prev = &tape.hidden[t * H];
    const double* z = &tape.update[t * H];
    const double* r = &tape.reset[t * H];
    const double* c = &tape.candidate[t * H];

    for (std::size_t i = 0; i < H; ++i) {
      dh_prev[i] = dh[i] * (1.0 - z[i]);
      da_z[i] = dh[i] * (c[i] - h_prev[i]) * z[i] * (1.0 - z[i]);
      da_c[i] = dh[i] * z[i] * (1.0 - c[i] * c[i]);
      rh[i] = r[i] * h_prev[i];
      d_rh[i] = 0.0;
    }

    k.axpy(x, da_c.data(), g.cand_in.data.data(), H);
    k.axpy(1.0, da_c.data(), g.cand_bias.data.data(), H);
    k.ger_acc(g.cand_rec.data.data(), H, H, da_c.data(), rh.data());
    k.gemv_t_acc(p.cand_rec.data.data(), H, H, da_c.data(), d_rh.data());

    for (std::size_t i = 0; i < H; ++i) {
      dh_prev[i] += d_rh[i] * r[i];
      da_r[i] = d_rh[i] * h_prev[i] * r[i] * (1.0 - r[i]);
    }

    k.axpy(x, da_r.data(), g.reset_in.data.data(), H);
    k.axpy(1.0, da_r.data(), g.reset_bias.data.data(), H);
    k.ger_acc(g.reset_rec.data.data(), H, H, da_r.data(), h_prev);
    k.gemv_t_acc(p.reset_rec.data.data(), H, H, da_r.data(), dh_prev.data());

    k.axpy(x, da_z.data(), g.update_in.data.data(), H);
    k.axpy(1.0, da_z.data(), g.update_bias.data.data(), H);
    k.ger_acc(g.update_rec.data.data(), H, H, da_z.data(), h_prev);
    k.gemv_t_acc(p.update_rec.data.data(), H, H, da_z.data(), dh_prev.data());

    std::swap(dh, dh_prev);
  }
}

HistoryConditioned::HistoryConditioned(const ModelParams& p, const ModelDims& d,
                                       std::span<const double> history)
    : dims_(d) {
  if (history.size() != d.history_len)
    throw ConfigError("history has " + std::to_string(history.size()) + " samples, model expects " +
                      std::to_string(d.history_len));
  p.check_shapes(d);
  const std::size_t H = d.gru_hidden, m = d.horizon;
  h_history_ = encode_history(history, p);
  require_finite(h_history_, "history encoder");

  base_.resize(m);
  for (std::size_t l = 0; l < m; ++l)
    base_[l] = p.out_bias.data[l] + simd::active().dot(&p.out_weight.data[l * d.features()], h_history_.data(), H);

  ctrl1_t_ = transpose(p.ctrl1_weight, 0, p.ctrl1_weight.cols);
  ctrl1_bias_ = p.ctrl1_bias.data;
  ctrl2_t_ = transpose(p.ctrl2_weight, 0, p.ctrl2_weight.cols);
  ctrl2_bias_ = p.ctrl2_bias.data;
  out_ctrl_t_ = transpose(p.out_weight, H, d.features());
}

void HistoryConditioned::predict(std::span<const double> currents, std::size_t batch,
                                 std::span<double> out) const {
  const std::size_t m = dims_.horizon, C = dims_.ctrl_hidden;
  if (currents.size() != batch * m || out.size() != batch * m)
    throw ConfigError("HistoryConditioned::predict: buffer sizes do not match batch x horizon");
  const auto& k = simd::active();
  std::vector<double> hidden(batch * C), encoded(batch * C);
  k.affine_batch_t(currents.data(), batch, m, ctrl1_t_.data(), C, ctrl1_bias_.data(), hidden.data());
  for (auto& v : hidden) v = std::max(0.0, v);
  k.affine_batch_t(hidden.data(), batch, C, ctrl2_t_.data(), C, ctrl2_bias_.data(), encoded.data());
  k.affine_batch_t(encoded.data(), batch, C, out_ctrl_t_.data(), m, base_.data(), out.data());
  require_finite(out, "decoder");
}

}  // namespace thermoloop::pigru
