// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace thermoloop {

inline constexpr double kZeroCelsiusK = 273.15;

constexpr double celsius_to_kelvin(double c) { return c + kZeroCelsiusK; }
constexpr double kelvin_to_celsius(double k) { return k - kZeroCelsiusK; }

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;

  constexpr bool contains(double v) const { return v >= lo && v <= hi; }
  constexpr double width() const { return hi - lo; }
  constexpr double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  bool operator==(const Bounds&) const = default;
};

}  // namespace thermoloop
