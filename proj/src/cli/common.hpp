// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermoloop/cli.hpp"
#include "thermoloop/kv_config.hpp"
#include "thermoloop/predictor.hpp"

namespace CLI {
class App;
}

namespace thermoloop::cli {

/// Bad flag combination detected after parsing; exits with status 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Action = std::function<void()>;

void add_gen_data(CLI::App& root, Action& action);
void add_train(CLI::App& root, Action& action);
void add_eval(CLI::App& root, Action& action);
void add_run_loop(CLI::App& root, Action& action);
void add_stability(CLI::App& root, Action& action);
void add_bench(CLI::App& root, Action& action);

/// Files merged left to right; later keys win.
KeyValueConfig load_configs(const std::vector<std::filesystem::path>& files);

/// 0 means "not given": THERMOLOOP_JOBS, then hardware concurrency.
std::size_t resolve_jobs(std::size_t flag);

/// `<path>.<suffix>` next to a single-file output.
std::filesystem::path sidecar(const std::filesystem::path& path, const std::string& suffix);

void write_config_echo(const std::filesystem::path& path, const KeyValueConfig& kv);

std::vector<double> parse_number_list(const std::string& text);

/// Where the linear baseline gets its coefficients: explicit values, a
/// regression on a dataset's training windows, or the built-in defaults.
struct LinearSource {
  std::optional<double> gain;
  std::optional<double> decay;
  std::filesystem::path fit_data;

  void add_options(CLI::App& cmd);
};

/// `model` is a checkpoint path, `linear`, or `physics` (zero-load lumped
/// model). `label` names checkpoint-backed predictors.
std::unique_ptr<mpc::Predictor> make_controller(const std::string& model, const plant::PlantConfig& plant_cfg,
                                                const LinearSource& linear, std::size_t horizon,
                                                const std::string& label = {});

/// Output directory built under a sibling temporary name and renamed into
/// place by commit(); an uncommitted staging directory is removed. An
/// existing target is replaced.
class StagedDir {
 public:
  explicit StagedDir(std::filesystem::path target);
  ~StagedDir();
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  const std::filesystem::path& path() const { return staging_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

/// Label used for setpoint/power values in file names: 25 -> "25", 1.5 -> "1.5".
std::string compact_number(double v);

}  // namespace thermoloop::cli
