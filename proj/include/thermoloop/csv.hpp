// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace thermoloop {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
void append_double(std::string& out, double v);

/// Full-string parse; accepts "nan"/"inf". Throws InvalidInputError.
double parse_double(std::string_view text);

std::vector<std::string_view> split_csv_line(std::string_view line);

/// Writes to a sibling temporary file and renames over `path` on commit().
/// If the object is destroyed without commit() the temporary is removed, so
/// a failed command never leaves a half-written output behind.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path);
  ~AtomicFile();
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  std::ofstream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Column-oriented numeric CSV with a header row.
struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;  // throws if absent
  std::vector<double> column_values(std::string_view name) const;
};

NumericTable read_numeric_csv(const std::filesystem::path& path);

}  // namespace thermoloop
