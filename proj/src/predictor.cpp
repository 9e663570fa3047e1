// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/predictor.hpp"

#include <cmath>

#include "thermoloop/error.hpp"
#include "thermoloop/units.hpp"

namespace thermoloop::mpc {
namespace {

void check_sizes(std::span<const double> currents, std::size_t batch, std::span<double> temps,
                 std::size_t m) {
  if (currents.size() != batch * m || temps.size() != batch * m)
    throw SizingError("predictor buffers do not hold batch x horizon values");
}

void check_history(std::span<const double> history, std::size_t need) {
  if (history.size() < need)
    throw SizingError("predictor needs " + std::to_string(need) + " history samples, got " +
                      std::to_string(history.size()));
}

class NeuralConditioned final : public ConditionedPredictor {
 public:
  NeuralConditioned(const Checkpoint& c, std::span<const double> history)
      : norm_(c.normalization), m_(c.dims.horizon), model_(c.params, c.dims, normalized(history, c)) {}

  void predict(std::span<const double> currents, std::size_t batch, std::span<double> temps) const override {
    check_sizes(currents, batch, temps, m_);
    std::vector<double> scaled(currents.size());
    for (std::size_t i = 0; i < currents.size(); ++i) scaled[i] = norm_.normalize_current(currents[i]);
    model_.predict(scaled, batch, temps);
    for (auto& t : temps) t = norm_.denormalize_temp(t);
  }

 private:
  static std::vector<double> normalized(std::span<const double> history, const Checkpoint& c) {
    std::vector<double> z(history.end() - static_cast<std::ptrdiff_t>(c.dims.history_len), history.end());
    for (auto& v : z) v = c.normalization.normalize_temp(v);
    return z;
  }

  Normalization norm_;
  std::size_t m_;
  pigru::HistoryConditioned model_;
};

class LinearConditioned final : public ConditionedPredictor {
 public:
  LinearConditioned(LinearModel model, double last, std::size_t m) : model_(model), last_(last), m_(m) {}

  void predict(std::span<const double> currents, std::size_t batch, std::span<double> temps) const override {
    check_sizes(currents, batch, temps, m_);
    for (std::size_t b = 0; b < batch; ++b) {
      double t = kelvin_to_celsius(last_);
      for (std::size_t l = 0; l < m_; ++l) {
        t = model_.gain * currents[b * m_ + l] + model_.decay * t;
        temps[b * m_ + l] = celsius_to_kelvin(t);
      }
    }
  }

 private:
  LinearModel model_;
  double last_;
  std::size_t m_;
};

class PhysicsConditioned final : public ConditionedPredictor {
 public:
  PhysicsConditioned(const plant::PhysicalConstants& c, double load, double dt, int substeps, double last,
                     std::size_t m)
      : c_(c), load_(load), dt_(dt / substeps), substeps_(substeps), last_(last), m_(m) {}

  void predict(std::span<const double> currents, std::size_t batch, std::span<double> temps) const override {
    check_sizes(currents, batch, temps, m_);
    for (std::size_t b = 0; b < batch; ++b) {
      double t = last_;
      for (std::size_t l = 0; l < m_; ++l) {
        const double i = currents[b * m_ + l];
        for (int s = 0; s < substeps_; ++s) t += dt_ * plant::temperature_rate(t, i, c_, load_);
        temps[b * m_ + l] = t;
      }
    }
  }

 private:
  plant::PhysicalConstants c_;
  double load_, dt_;
  int substeps_;
  double last_;
  std::size_t m_;
};

}  // namespace

std::vector<double> Predictor::predict_one(std::span<const double> history,
                                           std::span<const double> currents) const {
  std::vector<double> out(horizon());
  condition(history)->predict(currents, 1, out);
  return out;
}

NeuralPredictor::NeuralPredictor(Checkpoint ckpt, std::string label)
    : ckpt_(std::move(ckpt)), label_(std::move(label)) {
  ckpt_.params.check(ckpt_.dims);
}

std::unique_ptr<ConditionedPredictor> NeuralPredictor::condition(std::span<const double> history) const {
  check_history(history, history_len());
  return std::make_unique<NeuralConditioned>(ckpt_, history);
}

std::vector<double> linear_predict(double last_temp, std::span<const double> currents,
                                   const LinearModel& model) {
  std::vector<double> out(currents.size());
  LinearConditioned(model, last_temp, currents.size()).predict(currents, 1, out);
  return out;
}

LinearModel fit_linear_model(std::span<const datagen::SampleWindow> windows,
                             std::span<const std::size_t> indices) {
  // Normal equations of  y = gain * i + decay * p  in degC.
  double sii = 0, sip = 0, spp = 0, siy = 0, spy = 0;
  for (std::size_t idx : indices) {
    const auto& w = windows[idx];
    if (w.history_temps.empty()) continue;
    double prev = kelvin_to_celsius(w.history_temps.back());
    for (std::size_t l = 0; l < w.target_temps.size(); ++l) {
      const double i = w.control_currents[l];
      const double y = kelvin_to_celsius(w.target_temps[l]);
      sii += i * i;
      sip += i * prev;
      spp += prev * prev;
      siy += i * y;
      spy += prev * y;
      prev = y;
    }
  }
  const double det = sii * spp - sip * sip;
  if (!(std::abs(det) > 0.0) || !std::isfinite(det))
    throw SizingError("linear model regression is singular; need varied currents and temperatures");
  return {(siy * spp - spy * sip) / det, (spy * sii - siy * sip) / det};
}

LinearPredictor::LinearPredictor(LinearModel model, std::size_t horizon) : model_(model), horizon_(horizon) {
  if (horizon == 0) throw ConfigError("horizon must be >= 1");
}

std::unique_ptr<ConditionedPredictor> LinearPredictor::condition(std::span<const double> history) const {
  check_history(history, 1);
  return std::make_unique<LinearConditioned>(model_, history.back(), horizon_);
}

PhysicsPredictor::PhysicsPredictor(plant::PhysicalConstants constants, double assumed_load,
                                   double sample_period, int substeps, std::size_t horizon)
    : constants_(constants), load_(assumed_load), sample_period_(sample_period), substeps_(substeps),
      horizon_(horizon) {
  constants_.validate();
  if (!(sample_period > 0.0) || substeps < 1 || horizon == 0)
    throw ConfigError("physics predictor needs positive period, substeps and horizon");
}

std::unique_ptr<ConditionedPredictor> PhysicsPredictor::condition(std::span<const double> history) const {
  check_history(history, 1);
  return std::make_unique<PhysicsConditioned>(constants_, load_, sample_period_, substeps_, history.back(),
                                              horizon_);
}

}  // namespace thermoloop::mpc
