// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace thermoloop {

/// Flat `key = value` configuration text. Blank lines and `#` comments are
/// ignored; keys are dotted (`plant.laser_power_W`). Lists are comma
/// separated. Later assignments override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  void set(std::string key, std::string value);
  void merge(const KeyValueConfig& overrides);

  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;

  /// Keys under `prefix.` not listed in `known`; used to reject typos.
  std::vector<std::string> unknown_keys(std::string_view prefix,
                                        const std::vector<std::string_view>& known) const;

  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  /// Sorted, one `key = value` per line; parse(to_string()) reproduces *this.
  std::string to_string() const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

}  // namespace thermoloop
