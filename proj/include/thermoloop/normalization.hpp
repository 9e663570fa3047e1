// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace thermoloop {

/// Model-boundary scaling: temperatures are z-scored with training-set
/// statistics, currents divided by the actuator bound.
struct Normalization {
  double temp_mean = 300.15;   // K
  double temp_std = 1.0;       // K
  double current_scale = 2.0;  // A

  double normalize_temp(double k) const { return (k - temp_mean) / temp_std; }
  double denormalize_temp(double z) const { return temp_mean + temp_std * z; }
  double normalize_current(double a) const { return a / current_scale; }

  bool operator==(const Normalization&) const = default;
};

}  // namespace thermoloop
