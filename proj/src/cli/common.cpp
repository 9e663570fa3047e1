// SPDX-License-Identifier: Apache-2.0
#include "common.hpp"

#include <CLI11.hpp>

#include <unistd.h>

#include <atomic>
#include <cstdio>

#include "thermoloop/csv.hpp"
#include "thermoloop/checkpoint.hpp"
#include "thermoloop/datagen.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/parallel.hpp"

namespace thermoloop::cli {

KeyValueConfig load_configs(const std::vector<std::filesystem::path>& files) {
  KeyValueConfig kv;
  for (const auto& f : files) kv.merge(KeyValueConfig::load(f));
  return kv;
}

std::size_t resolve_jobs(std::size_t flag) { return flag ? flag : default_jobs(); }

std::filesystem::path sidecar(const std::filesystem::path& path, const std::string& suffix) {
  auto p = path;
  p += "." + suffix;
  return p;
}

void write_config_echo(const std::filesystem::path& path, const KeyValueConfig& kv) {
  write_file_atomic(path, "# effective configuration\n" + kv.to_string());
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (auto field : split_csv_line(text)) {
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    if (field.empty()) continue;
    out.push_back(parse_double(field));
  }
  if (out.empty()) throw UsageError("empty number list '" + text + "'");
  return out;
}

StagedDir::StagedDir(std::filesystem::path target) : target_(std::move(target)) {
  static std::atomic<unsigned> counter{0};
  if (target_.has_parent_path()) std::filesystem::create_directories(target_.parent_path());
  staging_ = target_;
  staging_ += ".partial." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  std::filesystem::remove_all(staging_);
  std::filesystem::create_directories(staging_);
}

StagedDir::~StagedDir() {
  if (!committed_) {
    std::error_code ec;
    std::filesystem::remove_all(staging_, ec);
  }
}

void StagedDir::commit() {
  std::error_code ec;
  std::filesystem::remove_all(target_, ec);
  std::filesystem::rename(staging_, target_, ec);
  if (ec) throw IoError("cannot move " + staging_.string() + " to " + target_.string() + ": " + ec.message());
  committed_ = true;
}

std::string compact_number(double v) { return format_double(v); }

void LinearSource::add_options(CLI::App& cmd) {
  cmd.add_option("--linear-gain", gain, "Linear baseline gain, degC per A");
  cmd.add_option("--linear-decay", decay, "Linear baseline decay per sample");
  cmd.add_option("--linear-data", fit_data, "Fit the linear baseline on this dataset's training windows")
      ->check(CLI::ExistingDirectory);
}

std::unique_ptr<mpc::Predictor> make_controller(const std::string& model, const plant::PlantConfig& plant_cfg,
                                                const LinearSource& linear, std::size_t horizon,
                                                const std::string& label) {
  if (model == "linear") {
    mpc::LinearModel lm;
    if (!linear.fit_data.empty()) {
      const auto ds = datagen::load_dataset(linear.fit_data);
      lm = mpc::fit_linear_model(ds.windows, ds.train_indices());
    }
    if (linear.gain) lm.gain = *linear.gain;
    if (linear.decay) lm.decay = *linear.decay;
    return std::make_unique<mpc::LinearPredictor>(lm, horizon);
  }
  if (model == "physics")
    return std::make_unique<mpc::PhysicsPredictor>(plant_cfg.constants, 0.0, plant_cfg.sample_period,
                                                   plant_cfg.substeps_per_sample, horizon);
  const std::filesystem::path path(model);
  return std::make_unique<mpc::NeuralPredictor>(load_checkpoint(path), label.empty() ? path.stem().string() : label);
}

}  // namespace thermoloop::cli
