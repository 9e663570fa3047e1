// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>
#include <memory>

#include "common.hpp"
#include "thermoloop/closed_loop.hpp"
#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/experiment.hpp"

namespace thermoloop::cli {
namespace {

struct EvalOptions {
  std::string model;
  std::filesystem::path data;
  std::filesystem::path trace;
  std::filesystem::path report;
  std::string split = "validation";
  std::string label;
  std::size_t jobs = 0;
  LinearSource linear;
};

std::vector<datagen::SampleWindow> select_split(const datagen::Dataset& ds, const std::string& split) {
  if (split == "all") return ds.windows;
  const auto idx = split == "train" ? ds.train_indices() : ds.validation_indices();
  std::vector<datagen::SampleWindow> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(ds.windows[i]);
  return out;
}

void run_eval(const EvalOptions& opt) {
  if (opt.data.empty() == opt.trace.empty()) throw UsageError("eval needs exactly one of --data or --trace");
  // Checkpoint horizon wins; baselines follow the dataset.
  std::size_t horizon = 5;
  std::optional<datagen::Dataset> ds;
  if (!opt.data.empty()) {
    ds = datagen::load_dataset(opt.data);
    horizon = ds->horizon;
  }
  const plant::PlantConfig plant_cfg;
  const auto predictor = make_controller(opt.model, plant_cfg, opt.linear, horizon, opt.label);

  std::vector<datagen::SampleWindow> windows;
  if (ds) {
    if (ds->horizon != predictor->horizon() || ds->history_len < predictor->history_len())
      throw SizingError("dataset windows (n=" + std::to_string(ds->history_len) + ", m=" +
                        std::to_string(ds->horizon) + ") do not fit model " + predictor->name());
    windows = select_split(*ds, opt.split);
  } else {
    const auto rows = mpc::read_closed_loop_csv(opt.trace);
    std::vector<double> temps, currents;
    for (const auto& r : rows) {
      temps.push_back(r.temp_meas);
      currents.push_back(r.current);
    }
    const std::size_t n = std::max<std::size_t>(predictor->history_len(), 100);
    if (temps.size() < n + predictor->horizon()) throw SizingError("trace too short for one window");
    windows = datagen::window_trajectory(temps, currents, n, predictor->horizon(), 1);
  }
  if (windows.empty()) throw SizingError("no windows to evaluate");

  const auto rep = experiment::evaluate_predictions(*predictor, windows, resolve_jobs(opt.jobs));
  write_file_atomic(opt.report, metrics::prediction_report_csv(predictor->name(), rep));
  write_file_atomic(sidecar(opt.report, "summary.txt"), metrics::prediction_summary(predictor->name() + ".", rep));
  std::printf("%s: %zu windows, MAE %.6g K, RMSE %.6g K, MAPE %.6g %%\n", predictor->name().c_str(),
              windows.size(), rep.overall.mae, rep.overall.rmse, rep.overall.mape);
}

}  // namespace

void add_eval(CLI::App& root, Action& action) {
  auto opt = std::make_shared<EvalOptions>();
  auto* cmd = root.add_subcommand("eval", "Score multi-step predictions");
  cmd->add_option("--model", opt->model, "Checkpoint path, 'linear' or 'physics'")->required();
  cmd->add_option("--data", opt->data, "Dataset directory")->check(CLI::ExistingDirectory);
  cmd->add_option("--trace", opt->trace, "Closed-loop CSV to window instead of a dataset")->check(CLI::ExistingFile);
  cmd->add_option("--report", opt->report, "Per-step error CSV")->required();
  cmd->add_option("--split", opt->split, "Dataset windows to score")
      ->check(CLI::IsMember({"validation", "train", "all"}))
      ->capture_default_str();
  cmd->add_option("--label", opt->label, "Model name in the report (default: checkpoint file stem)");
  cmd->add_option("--jobs", opt->jobs, "Worker threads");
  opt->linear.add_options(*cmd);
  cmd->callback([opt, &action] { action = [opt] { run_eval(*opt); }; });
}

}  // namespace thermoloop::cli
