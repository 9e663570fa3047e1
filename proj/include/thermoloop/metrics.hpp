// SPDX-License-Identifier: Apache-2.0
#pragma once

// Prediction error and temperature-stability statistics.

#include <span>
#include <string>
#include <vector>

namespace thermoloop::metrics {

struct StepErrors {
  double mae = 0.0;   // K
  double rmse = 0.0;  // K
  double mape = 0.0;  // percent, against degC targets
};

struct PredictionReport {
  std::vector<StepErrors> per_step;
  StepErrors overall;
  std::size_t samples = 0;
  std::size_t mape_excluded = 0;  // targets at exactly 0 degC
};

/// preds/targets: batch x m in K, row-major.
PredictionReport stepwise_errors(std::span<const double> preds, std::span<const double> targets,
                                 std::size_t batch, std::size_t horizon);

double range_stat(std::span<const double> series);
/// Population standard deviation (divides by N).
double std_stat(std::span<const double> series);

struct AllanPoint {
  double tau = 0.0;    // s
  double sigma = 0.0;  // same unit as the series
  std::size_t blocks = 0;
};

/// Non-overlapping Allan deviation. Each tau must be a whole multiple of the
/// sample period (InvalidInputError otherwise); taus with fewer than two full
/// blocks are omitted and listed in `skipped` when given.
std::vector<AllanPoint> allan_deviation(std::span<const double> series, double sample_period,
                                        std::span<const double> taus,
                                        std::vector<double>* skipped = nullptr);

inline constexpr double kMinStabilityWindow = 1000.0;  // s

struct StabilityReport {
  double range = 0.0;
  double std = 0.0;
  std::vector<AllanPoint> allan;
  std::size_t samples = 0;
};

/// Range, std and Allan deviation at 1, 10, 100 s (or `taus`). The series
/// must span at least kMinStabilityWindow seconds.
StabilityReport stability_report(std::span<const double> series, double sample_period,
                                 std::span<const double> taus = {});

// Report layouts. Stability values are written in degC differences, which
// equal K differences.

/// Header `model,step,mae,rmse,mape_pct`, one row per step then `overall`.
std::string prediction_report_csv(const std::string& model, const PredictionReport& r);
/// `label,range,std,allan_<tau>s...`
std::string stability_header(std::span<const AllanPoint> allan);
std::string stability_row(const std::string& label, const StabilityReport& r);
/// `key = value` lines.
std::string prediction_summary(const std::string& prefix, const PredictionReport& r);
std::string stability_summary(const std::string& prefix, const StabilityReport& r);

}  // namespace thermoloop::metrics
