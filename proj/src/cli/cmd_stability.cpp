// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <memory>

#include "common.hpp"
#include "thermoloop/closed_loop.hpp"
#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/metrics.hpp"

namespace thermoloop::cli {
namespace {

struct StabilityOptions {
  std::filesystem::path trace;
  std::filesystem::path report;
  std::string column = "temp_meas_K";
  double skip = 0.0;
  std::string taus = "1,10,100";
  std::string label;
};

void run_stability(const StabilityOptions& opt) {
  const auto rows = mpc::read_closed_loop_csv(opt.trace);
  if (rows.size() < 2) throw SizingError("trace has fewer than two rows");
  const double period = rows[1].time - rows[0].time;
  if (!(period > 0.0)) throw InvalidInputError("trace time column is not increasing");

  std::vector<double> series;
  for (const auto& r : rows) {
    if (r.time < rows.front().time + opt.skip) continue;
    series.push_back(opt.column == "temp_true_K" ? r.temp_true : r.temp_meas);
  }
  const auto taus = parse_number_list(opt.taus);
  const auto rep = metrics::stability_report(series, period, taus);
  const std::string label = opt.label.empty() ? opt.trace.stem().string() : opt.label;
  write_file_atomic(opt.report, metrics::stability_header(rep.allan) + metrics::stability_row(label, rep));
  write_file_atomic(sidecar(opt.report, "summary.txt"), metrics::stability_summary(label + ".", rep));
  std::printf("%s: %zu samples, range %.6g K, std %.6g K\n", label.c_str(), rep.samples, rep.range, rep.std);
  for (const auto& a : rep.allan) std::printf("  allan(%gs) %.6g K over %zu blocks\n", a.tau, a.sigma, a.blocks);
}

}  // namespace

void add_stability(CLI::App& root, Action& action) {
  auto opt = std::make_shared<StabilityOptions>();
  auto* cmd = root.add_subcommand("stability", "Range, std and Allan deviation of a closed-loop trace");
  cmd->add_option("--trace", opt->trace, "Closed-loop CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--report", opt->report, "Stability CSV")->required();
  cmd->add_option("--column", opt->column, "Temperature column")
      ->check(CLI::IsMember({"temp_meas_K", "temp_true_K"}))
      ->capture_default_str();
  cmd->add_option("--skip-s", opt->skip, "Seconds discarded from the start")->capture_default_str();
  cmd->add_option("--taus", opt->taus, "Allan averaging times in s, comma separated")->capture_default_str();
  cmd->add_option("--label", opt->label, "Row label (default: trace file stem)");
  cmd->callback([opt, &action] { action = [opt] { run_stability(*opt); }; });
}

}  // namespace thermoloop::cli
