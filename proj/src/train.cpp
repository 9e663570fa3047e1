// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/parallel.hpp"
#include "thermoloop/rng.hpp"

namespace thermoloop::train {
namespace {

void check_batch_shape(std::span<const double> a, std::span<const double> b, std::size_t batch,
                       std::size_t horizon, const char* what) {
  if (batch == 0 || horizon == 0) throw SizingError(std::string(what) + ": empty batch");
  if (a.size() != batch * horizon || b.size() != batch * horizon)
    throw SizingError(std::string(what) + ": buffers do not hold batch x horizon values");
}

// d(residual)/d(T_l); the derivative w.r.t. T_{l-1} is -1/dt.
double residual_slope(double current, const plant::PhysicalConstants& c, double dt) {
  return 1.0 / dt - (c.seebeck * current - c.heat_transfer) / c.thermal_mass();
}

// Loss contributions and d(loss)/d(normalized output) of one sample, both
// already carrying the 1/(B m) prefactor and the lambda weights.
struct SampleTerms {
  double data = 0.0;
  double physics = 0.0;
};

SampleTerms sample_terms(std::span<const double> out, std::span<const double> target,
                         std::span<const double> raw_currents, const Normalization& norm,
                         const TrainConfig& cfg, double lambda_eff, double inv_bm,
                         std::span<double> d_out) {
  const std::size_t m = out.size();
  SampleTerms t;
  for (std::size_t l = 0; l < m; ++l) {
    const double e = out[l] - target[l];
    t.data += e * e;
    if (!d_out.empty()) d_out[l] = 2.0 * e * inv_bm * (1.0 - lambda_eff);
  }
  t.data *= inv_bm;
  if (m < 2) return t;

  const double dt = cfg.sample_period;
  for (std::size_t l = 1; l < m; ++l) {
    // Difference taken before denormalizing: subtracting two ~300 K values
    // would cost about 13 bits.
    const double cur = norm.denormalize_temp(out[l]);
    const double r = norm.temp_std * (out[l] - out[l - 1]) / dt -
                     plant::temperature_rate(cur, raw_currents[l], cfg.physics, 0.0);
    t.physics += r * r;
    if (!d_out.empty() && lambda_eff != 0.0) {
      const double g = 2.0 * r * inv_bm * lambda_eff * norm.temp_std;
      d_out[l] += g * residual_slope(raw_currents[l], cfg.physics, dt);
      d_out[l - 1] -= g / dt;
    }
  }
  t.physics *= inv_bm;
  return t;
}

LossReport combine(double data, double physics, double lambda_eff) {
  return {data, physics, (1.0 - lambda_eff) * data + lambda_eff * physics, lambda_eff};
}

// Fisher-Yates over a 64-bit engine; independent of the standard library's
// distribution implementations so permutations match across toolchains.
void permute(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

double TrainConfig::effective_lambda(std::size_t epoch) const {
  if (lambda_ramp_epochs == 0) return lambda;
  return lambda * std::min(1.0, static_cast<double>(epoch) / static_cast<double>(lambda_ramp_epochs));
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  if (lr_step_epochs == 0) return learning_rate;
  return learning_rate * std::pow(lr_decay, static_cast<double>(epoch / lr_step_epochs));
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train.learning_rate must be positive");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ConfigError("train.lambda must lie in [0, 1)");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train.lr_decay must lie in (0, 1]");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (!(sample_period > 0.0)) throw ConfigError("sample period must be positive");
  physics.validate();
}

double data_loss(std::span<const double> pred, std::span<const double> target, std::size_t batch,
                 std::size_t horizon) {
  check_batch_shape(pred, target, batch, horizon, "data_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    s += e * e;
  }
  return s / static_cast<double>(pred.size());
}

double physics_residual(double temp_prev, double temp, double current,
                        const plant::PhysicalConstants& c, double dt) {
  return (temp - temp_prev) / dt - plant::temperature_rate(temp, current, c, 0.0);
}

double physics_loss(std::span<const double> pred_temps, std::span<const double> currents,
                    std::size_t batch, std::size_t horizon, const plant::PhysicalConstants& c,
                    double dt) {
  check_batch_shape(pred_temps, currents, batch, horizon, "physics_loss");
  if (horizon < 2) throw SizingError("physics_loss needs a horizon of at least 2 steps");
  double s = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* t = pred_temps.data() + b * horizon;
    const double* i = currents.data() + b * horizon;
    for (std::size_t l = 1; l < horizon; ++l) {
      const double r = physics_residual(t[l - 1], t[l], i[l], c, dt);
      s += r * r;
    }
  }
  return s / static_cast<double>(batch * horizon);
}

PreparedWindows PreparedWindows::from(std::span<const datagen::SampleWindow> windows,
                                      std::span<const std::size_t> indices, const Normalization& norm) {
  PreparedWindows p;
  p.count = indices.size();
  if (p.count == 0) return p;
  p.history_len = windows[indices.front()].history_temps.size();
  p.horizon = windows[indices.front()].target_temps.size();
  p.history.reserve(p.count * p.history_len);
  p.currents.reserve(p.count * p.horizon);
  p.currents_raw.reserve(p.count * p.horizon);
  p.targets.reserve(p.count * p.horizon);
  for (std::size_t idx : indices) {
    const auto& w = windows[idx];
    if (w.history_temps.size() != p.history_len || w.target_temps.size() != p.horizon ||
        w.control_currents.size() != p.horizon)
      throw SizingError("window " + std::to_string(idx) + " has inconsistent lengths");
    for (double v : w.history_temps) p.history.push_back(norm.normalize_temp(v));
    for (double v : w.control_currents) {
      p.currents.push_back(norm.normalize_current(v));
      p.currents_raw.push_back(v);
    }
    for (double v : w.target_temps) p.targets.push_back(norm.normalize_temp(v));
  }
  return p;
}

LossReport total_loss(const PreparedWindows& data, std::span<const std::size_t> batch,
                      const Model& model, const TrainConfig& cfg, std::size_t epoch) {
  if (batch.empty()) throw SizingError("total_loss: empty batch");
  const std::size_t m = model.dims.horizon;
  const double lambda_eff = cfg.effective_lambda(epoch);
  const double inv_bm = 1.0 / static_cast<double>(batch.size() * m);
  double data_sum = 0.0, phys_sum = 0.0;
  for (std::size_t idx : batch) {
    const auto out = pigru::predict({{data.history_of(idx).begin(), data.history_of(idx).end()},
                                     {data.currents_of(idx).begin(), data.currents_of(idx).end()}},
                                    model.params, model.dims);
    const auto t = sample_terms(out, data.targets_of(idx), data.raw_currents_of(idx), model.normalization,
                                cfg, lambda_eff, inv_bm, {});
    data_sum += t.data;
    phys_sum += t.physics;
  }
  return combine(data_sum, phys_sum, lambda_eff);
}

GradientResult gradients(const PreparedWindows& data, std::span<const std::size_t> batch,
                         const Model& model, const TrainConfig& cfg, std::size_t epoch) {
  if (batch.empty()) throw SizingError("gradients: empty batch");
  const auto& dims = model.dims;
  const std::size_t m = dims.horizon;
  const double lambda_eff = cfg.effective_lambda(epoch);
  const double inv_bm = 1.0 / static_cast<double>(batch.size() * m);

  std::vector<pigru::ModelParams> slots(batch.size(), pigru::ModelParams::zeros(dims));
  std::vector<SampleTerms> terms(batch.size());
  parallel_for(batch.size(), cfg.jobs, [&](std::size_t i) {
    const std::size_t idx = batch[i];
    pigru::Tape tape;
    pigru::forward(model.params, dims, data.history_of(idx), data.currents_of(idx), tape);
    std::vector<double> d_out(m);
    terms[i] = sample_terms(tape.output, data.targets_of(idx), data.raw_currents_of(idx),
                            model.normalization, cfg, lambda_eff, inv_bm, d_out);
    pigru::backward(model.params, dims, data.history_of(idx), data.currents_of(idx), tape, d_out, slots[i]);
  });

  GradientResult res;
  res.grads = std::move(slots.front());
  auto dst = res.grads.tensors();
  for (std::size_t i = 1; i < slots.size(); ++i) {
    const auto src = std::as_const(slots[i]).tensors();
    for (std::size_t k = 0; k < pigru::ModelParams::kTensorCount; ++k)
      for (std::size_t j = 0; j < dst[k]->data.size(); ++j) dst[k]->data[j] += src[k]->data[j];
  }
  double data_sum = 0.0, phys_sum = 0.0;
  for (const auto& t : terms) {
    data_sum += t.data;
    phys_sum += t.physics;
  }
  res.loss = combine(data_sum, phys_sum, lambda_eff);
  res.grads.for_each([](std::string_view name, const pigru::Tensor& t) {
    for (double v : t.data)
      if (!std::isfinite(v)) throw NumericFault("non-finite gradient in tensor " + std::string(name));
  });
  return res;
}

AdamState AdamState::for_params(const pigru::ModelDims& dims, double beta1, double beta2,
                                double epsilon) {
  AdamState s;
  s.first_moment = pigru::ModelParams::zeros(dims);
  s.second_moment = pigru::ModelParams::zeros(dims);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(pigru::ModelParams& params, const pigru::ModelParams& grads, AdamState& state,
               double learning_rate) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m1 = state.first_moment.tensors();
  auto m2 = state.second_moment.tensors();
  for (std::size_t k = 0; k < pigru::ModelParams::kTensorCount; ++k) {
    if (g[k]->data.size() != p[k]->data.size() || m1[k]->data.size() != p[k]->data.size() ||
        m2[k]->data.size() != p[k]->data.size())
      throw ConfigError("adam_step: shape mismatch in tensor " +
                        std::string(pigru::ModelParams::tensor_names()[k]));
  }
  ++state.timestep;
  const double t = static_cast<double>(state.timestep);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < pigru::ModelParams::kTensorCount; ++k) {
    auto& w = p[k]->data;
    const auto& d = g[k]->data;
    auto& a = m1[k]->data;
    auto& b = m2[k]->data;
    for (std::size_t j = 0; j < w.size(); ++j) {
      a[j] = state.beta1 * a[j] + (1.0 - state.beta1) * d[j];
      b[j] = state.beta2 * b[j] + (1.0 - state.beta2) * d[j] * d[j];
      w[j] -= learning_rate * (a[j] / c1) / (std::sqrt(b[j] / c2) + state.epsilon);
    }
  }
}

double evaluate_data_loss(const PreparedWindows& data, const Model& model, std::size_t jobs) {
  if (data.count == 0) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t m = model.dims.horizon;
  std::vector<double> sums(data.count);
  parallel_for(data.count, jobs, [&](std::size_t i) {
    const pigru::HistoryConditioned hc(model.params, model.dims, data.history_of(i));
    std::vector<double> out(m);
    hc.predict(data.currents_of(i), 1, out);
    const auto tgt = data.targets_of(i);
    double s = 0.0;
    for (std::size_t l = 0; l < m; ++l) s += (out[l] - tgt[l]) * (out[l] - tgt[l]);
    sums[i] = s;
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(data.count * m);
}

FitResult fit(const datagen::Dataset& dataset, const pigru::ModelDims& dims, const TrainConfig& cfg) {
  cfg.validate();
  dims.validate();
  if (dataset.history_len != dims.history_len || dataset.horizon != dims.horizon)
    throw ConfigError("dataset windows are " + std::to_string(dataset.history_len) + "+" +
                      std::to_string(dataset.horizon) + " samples, model expects " +
                      std::to_string(dims.history_len) + "+" + std::to_string(dims.horizon));
  const auto train_idx = dataset.train_indices();
  if (train_idx.empty()) throw SizingError("dataset has no training windows");
  const auto val_idx = dataset.validation_indices();

  FitResult res;
  res.model = {dims, dataset.normalization, pigru::ModelParams::initialized(dims, derive_seed(cfg.seed, 0))};
  const auto train = PreparedWindows::from(dataset.windows, train_idx, dataset.normalization);
  const auto val = PreparedWindows::from(dataset.windows, val_idx, dataset.normalization);
  res.initial_validation_data_loss = evaluate_data_loss(val, res.model, cfg.jobs);
  if (cfg.epochs == 0) return res;

  auto adam = AdamState::for_params(dims, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
  std::mt19937_64 rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(train.count);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    permute(order, rng);
    const double lr = cfg.learning_rate_at(epoch);
    EpochLog summary{epoch, {}, 0.0, lr};
    summary.train.lambda_eff = cfg.effective_lambda(epoch);
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batches) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      GradientResult g;
      try {
        g = gradients(train, batch, res.model, cfg, epoch);
      } catch (const NumericFault& e) {
        throw NumericFault(std::string(e.what()) + " at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batches));
      }
      if (!std::isfinite(g.loss.total))
        throw NumericFault("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batches));
      adam_step(res.model.params, g.grads, adam, lr);
      res.batches.push_back({epoch, batches, g.loss, lr});
      summary.train.data += g.loss.data;
      summary.train.physics += g.loss.physics;
      summary.train.total += g.loss.total;
    }
    summary.train.data /= static_cast<double>(batches);
    summary.train.physics /= static_cast<double>(batches);
    summary.train.total /= static_cast<double>(batches);
    summary.validation_data_loss = evaluate_data_loss(val, res.model, cfg.jobs);
    res.epochs.push_back(summary);
  }
  return res;
}

std::string training_log_csv(std::span<const BatchLog> rows) {
  std::string out = "epoch,batch,data_loss,physics_loss,total,lr,lambda_eff\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + ',' + std::to_string(r.batch) + ',';
    append_double(out, r.loss.data);
    out += ',';
    append_double(out, r.loss.physics);
    out += ',';
    append_double(out, r.loss.total);
    out += ',';
    append_double(out, r.learning_rate);
    out += ',';
    append_double(out, r.loss.lambda_eff);
    out += '\n';
  }
  return out;
}

std::string epoch_log_csv(std::span<const EpochLog> rows) {
  std::string out = "epoch,train_data_loss,train_physics_loss,train_total,val_data_loss,lr,lambda_eff\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + ',';
    append_double(out, r.train.data);
    out += ',';
    append_double(out, r.train.physics);
    out += ',';
    append_double(out, r.train.total);
    out += ',';
    append_double(out, r.validation_data_loss);
    out += ',';
    append_double(out, r.learning_rate);
    out += ',';
    append_double(out, r.train.lambda_eff);
    out += '\n';
  }
  return out;
}

TrainConfig train_config_from(const KeyValueConfig& kv, TrainConfig base) {
  static const std::vector<std::string_view> known = {
      "epochs", "batch_size", "learning_rate", "lambda", "lambda_ramp_epochs", "lr_step_epochs",
      "lr_decay", "adam_beta1", "adam_beta2", "adam_epsilon", "seed"};
  if (auto unknown = kv.unknown_keys("train", known); !unknown.empty())
    throw ConfigError("unknown config key " + unknown.front());
  auto count = [&](std::string_view key, std::size_t fallback) {
    const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  TrainConfig c = base;
  c.epochs = count("train.epochs", c.epochs);
  c.batch_size = count("train.batch_size", c.batch_size);
  c.learning_rate = kv.get_double("train.learning_rate", c.learning_rate);
  c.lambda = kv.get_double("train.lambda", c.lambda);
  c.lambda_ramp_epochs = count("train.lambda_ramp_epochs", c.lambda_ramp_epochs);
  c.lr_step_epochs = count("train.lr_step_epochs", c.lr_step_epochs);
  c.lr_decay = kv.get_double("train.lr_decay", c.lr_decay);
  c.adam_beta1 = kv.get_double("train.adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_double("train.adam_beta2", c.adam_beta2);
  c.adam_epsilon = kv.get_double("train.adam_epsilon", c.adam_epsilon);
  c.seed = kv.get_u64("train.seed", c.seed);
  c.validate();
  return c;
}

void write_train_config(KeyValueConfig& kv, const TrainConfig& c) {
  kv.set("train.epochs", std::to_string(c.epochs));
  kv.set("train.batch_size", std::to_string(c.batch_size));
  kv.set("train.learning_rate", format_double(c.learning_rate));
  kv.set("train.lambda", format_double(c.lambda));
  kv.set("train.lambda_ramp_epochs", std::to_string(c.lambda_ramp_epochs));
  kv.set("train.lr_step_epochs", std::to_string(c.lr_step_epochs));
  kv.set("train.lr_decay", format_double(c.lr_decay));
  kv.set("train.adam_beta1", format_double(c.adam_beta1));
  kv.set("train.adam_beta2", format_double(c.adam_beta2));
  kv.set("train.adam_epsilon", format_double(c.adam_epsilon));
  kv.set("train.seed", std::to_string(c.seed));
}

pigru::ModelDims model_dims_from(const KeyValueConfig& kv, pigru::ModelDims base) {
  static const std::vector<std::string_view> known = {"history_len", "horizon", "gru_hidden",
                                                      "ctrl_hidden"};
  if (auto unknown = kv.unknown_keys("model", known); !unknown.empty())
    throw ConfigError("unknown config key " + unknown.front());
  auto count = [&](std::string_view key, std::size_t fallback) {
    const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 1) throw ConfigError(std::string(key) + " must be >= 1");
    return static_cast<std::size_t>(v);
  };
  pigru::ModelDims d = base;
  d.history_len = count("model.history_len", d.history_len);
  d.horizon = count("model.horizon", d.horizon);
  d.gru_hidden = count("model.gru_hidden", d.gru_hidden);
  d.ctrl_hidden = count("model.ctrl_hidden", d.ctrl_hidden);
  return d;
}

void write_model_dims(KeyValueConfig& kv, const pigru::ModelDims& d) {
  kv.set("model.history_len", std::to_string(d.history_len));
  kv.set("model.horizon", std::to_string(d.horizon));
  kv.set("model.gru_hidden", std::to_string(d.gru_hidden));
  kv.set("model.ctrl_hidden", std::to_string(d.ctrl_hidden));
}

}  // namespace thermoloop::train
