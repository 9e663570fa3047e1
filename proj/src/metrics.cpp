// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/units.hpp"

namespace thermoloop::metrics {
namespace {

void require_nonempty(std::span<const double> s, const char* what) {
  if (s.empty()) throw InvalidInputError(std::string(what) + " of an empty series");
}

std::string tau_label(double tau) {
  return format_double(tau) + "s";
}

}  // namespace

PredictionReport stepwise_errors(std::span<const double> preds, std::span<const double> targets,
                                 std::size_t batch, std::size_t horizon) {
  if (batch == 0 || horizon == 0) throw InvalidInputError("stepwise_errors needs a non-empty batch");
  if (preds.size() != batch * horizon || targets.size() != batch * horizon)
    throw SizingError("stepwise_errors: buffers do not hold batch x horizon values");

  PredictionReport r;
  r.samples = batch;
  r.per_step.resize(horizon);
  std::vector<double> abs_sum(horizon, 0.0), sq_sum(horizon, 0.0), pct_sum(horizon, 0.0);
  std::vector<std::size_t> pct_n(horizon, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < horizon; ++l) {
      const double e = preds[b * horizon + l] - targets[b * horizon + l];
      abs_sum[l] += std::abs(e);
      sq_sum[l] += e * e;
      const double base = kelvin_to_celsius(targets[b * horizon + l]);
      if (base == 0.0) {
        ++r.mape_excluded;
      } else {
        pct_sum[l] += std::abs(e) / std::abs(base);
        ++pct_n[l];
      }
    }
  }
  double abs_all = 0.0, sq_all = 0.0, pct_all = 0.0;
  std::size_t pct_all_n = 0;
  const double nb = static_cast<double>(batch);
  for (std::size_t l = 0; l < horizon; ++l) {
    r.per_step[l].mae = abs_sum[l] / nb;
    r.per_step[l].rmse = std::sqrt(sq_sum[l] / nb);
    r.per_step[l].mape = pct_n[l] ? 100.0 * pct_sum[l] / static_cast<double>(pct_n[l]) : 0.0;
    abs_all += abs_sum[l];
    sq_all += sq_sum[l];
    pct_all += pct_sum[l];
    pct_all_n += pct_n[l];
  }
  const double n = nb * static_cast<double>(horizon);
  r.overall.mae = abs_all / n;
  r.overall.rmse = std::sqrt(sq_all / n);
  r.overall.mape = pct_all_n ? 100.0 * pct_all / static_cast<double>(pct_all_n) : 0.0;
  return r;
}

double range_stat(std::span<const double> series) {
  require_nonempty(series, "range");
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  return *hi - *lo;
}

double std_stat(std::span<const double> series) {
  require_nonempty(series, "standard deviation");
  // Deviations from the first sample: a constant series gives exactly 0 and
  // the sum does not carry the ~300 K offset.
  const double origin = series.front();
  double mean = 0.0;
  for (double v : series) mean += v - origin;
  mean /= static_cast<double>(series.size());
  double ss = 0.0;
  for (double v : series) ss += (v - origin - mean) * (v - origin - mean);
  return std::sqrt(ss / static_cast<double>(series.size()));
}

std::vector<AllanPoint> allan_deviation(std::span<const double> series, double sample_period,
                                        std::span<const double> taus, std::vector<double>* skipped) {
  if (!(sample_period > 0.0)) throw InvalidInputError("sample period must be positive");
  std::vector<AllanPoint> out;
  for (double tau : taus) {
    const double ratio = tau / sample_period;
    const double rounded = std::round(ratio);
    if (!(tau > 0.0) || rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
      throw InvalidInputError("tau " + format_double(tau) + " s is not a positive multiple of the " +
                              format_double(sample_period) + " s sample period");
    const auto len = static_cast<std::size_t>(rounded);
    const std::size_t blocks = series.size() / len;
    if (blocks < 2) {
      if (skipped) skipped->push_back(tau);
      continue;
    }
    double prev = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < blocks; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < len; ++i) s += series[k * len + i];
      const double mean = s / static_cast<double>(len);
      if (k) acc += (mean - prev) * (mean - prev);
      prev = mean;
    }
    out.push_back({tau, std::sqrt(acc / (2.0 * static_cast<double>(blocks - 1))), blocks});
  }
  return out;
}

StabilityReport stability_report(std::span<const double> series, double sample_period,
                                 std::span<const double> taus) {
  if (!(sample_period > 0.0)) throw InvalidInputError("sample period must be positive");
  const double span_s = static_cast<double>(series.size()) * sample_period;
  if (span_s + 1e-9 < kMinStabilityWindow)
    throw InvalidInputError("stability report needs at least " + format_double(kMinStabilityWindow) +
                            " s of data, got " + format_double(span_s) + " s");
  static const double default_taus[] = {1.0, 10.0, 100.0};
  StabilityReport r;
  r.samples = series.size();
  r.range = range_stat(series);
  r.std = std_stat(series);
  r.allan = allan_deviation(series, sample_period, taus.empty() ? std::span<const double>(default_taus) : taus);
  return r;
}

std::string prediction_report_csv(const std::string& model, const PredictionReport& r) {
  std::string out = "model,step,mae,rmse,mape_pct\n";
  auto row = [&](const std::string& step, const StepErrors& e) {
    out += model + ',' + step + ',';
    append_double(out, e.mae);
    out += ',';
    append_double(out, e.rmse);
    out += ',';
    append_double(out, e.mape);
    out += '\n';
  };
  for (std::size_t l = 0; l < r.per_step.size(); ++l) row(std::to_string(l + 1), r.per_step[l]);
  row("overall", r.overall);
  return out;
}

std::string stability_header(std::span<const AllanPoint> allan) {
  std::string out = "label,range,std";
  for (const auto& a : allan) out += ",allan_" + tau_label(a.tau);
  return out + '\n';
}

std::string stability_row(const std::string& label, const StabilityReport& r) {
  std::string out = label + ',';
  append_double(out, r.range);
  out += ',';
  append_double(out, r.std);
  for (const auto& a : r.allan) {
    out += ',';
    append_double(out, a.sigma);
  }
  return out + '\n';
}

std::string prediction_summary(const std::string& prefix, const PredictionReport& r) {
  std::string out;
  auto kv = [&](const std::string& key, double v) {
    out += prefix + key + " = ";
    append_double(out, v);
    out += '\n';
  };
  kv("samples", static_cast<double>(r.samples));
  kv("mape_excluded", static_cast<double>(r.mape_excluded));
  kv("overall.mae", r.overall.mae);
  kv("overall.rmse", r.overall.rmse);
  kv("overall.mape_pct", r.overall.mape);
  for (std::size_t l = 0; l < r.per_step.size(); ++l) {
    const std::string s = "step" + std::to_string(l + 1) + ".";
    kv(s + "mae", r.per_step[l].mae);
    kv(s + "rmse", r.per_step[l].rmse);
    kv(s + "mape_pct", r.per_step[l].mape);
  }
  return out;
}

std::string stability_summary(const std::string& prefix, const StabilityReport& r) {
  std::string out;
  auto kv = [&](const std::string& key, double v) {
    out += prefix + key + " = ";
    append_double(out, v);
    out += '\n';
  };
  kv("samples", static_cast<double>(r.samples));
  kv("range", r.range);
  kv("std", r.std);
  for (const auto& a : r.allan) kv("allan_" + tau_label(a.tau), a.sigma);
  return out;
}

}  // namespace thermoloop::metrics
