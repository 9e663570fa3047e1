// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>
#include <memory>

#include "common.hpp"
#include "thermoloop/csv.hpp"
#include "thermoloop/datagen.hpp"
#include "thermoloop/error.hpp"

namespace thermoloop::cli {
namespace {

struct GenDataOptions {
  std::vector<std::filesystem::path> configs;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<std::size_t> stride;
  std::size_t jobs = 0;
};

datagen::BuildOptions build_options_from(const KeyValueConfig& kv) {
  static const std::vector<std::string_view> known = {"history_len", "horizon", "stride",
                                                      "validation_fraction"};
  if (auto unknown = kv.unknown_keys("dataset", known); !unknown.empty())
    throw ConfigError("unknown config key " + unknown.front());
  datagen::BuildOptions o;
  auto count = [&](std::string_view key, std::size_t fallback) {
    const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 1) throw ConfigError(std::string(key) + " must be >= 1");
    return static_cast<std::size_t>(v);
  };
  o.history_len = count("dataset.history_len", o.history_len);
  o.horizon = count("dataset.horizon", o.horizon);
  o.stride = count("dataset.stride", o.stride);
  o.validation_fraction = kv.get_double("dataset.validation_fraction", o.validation_fraction);
  if (!(o.validation_fraction >= 0.0 && o.validation_fraction < 1.0))
    throw ConfigError("dataset.validation_fraction must lie in [0, 1)");
  return o;
}

void run_gen_data(const GenDataOptions& opt) {
  KeyValueConfig kv = load_configs(opt.configs);
  if (opt.seed) kv.set("excitation.seed", std::to_string(*opt.seed));
  if (opt.duration) kv.set("excitation.duration_s", format_double(*opt.duration));
  if (opt.stride) kv.set("dataset.stride", std::to_string(*opt.stride));

  const auto plant_cfg = plant::plant_config_from(kv);
  const auto spec = datagen::excitation_spec_from(kv);
  auto build = build_options_from(kv);
  build.jobs = resolve_jobs(opt.jobs);

  KeyValueConfig effective;
  plant::write_plant_config(effective, plant_cfg);
  datagen::write_excitation_spec(effective, spec);
  effective.set("dataset.history_len", std::to_string(build.history_len));
  effective.set("dataset.horizon", std::to_string(build.horizon));
  effective.set("dataset.stride", std::to_string(build.stride));
  effective.set("dataset.validation_fraction", format_double(build.validation_fraction));

  const auto ds = datagen::build_dataset(spec, plant_cfg, build);
  StagedDir dir(opt.out);
  datagen::save_dataset(ds, dir.path());
  write_config_echo(dir.path() / "effective_config.txt", effective);
  dir.commit();

  std::printf("power_W,samples,truncated,train_windows,validation_windows\n");
  for (const auto& t : ds.trajectories)
    std::printf("%s,%zu,%d,%zu,%zu\n", format_double(t.power).c_str(), t.samples, t.truncated ? 1 : 0,
                t.train_windows, t.validation_windows);
  std::printf("total windows %zu -> %s\n", ds.windows.size(), opt.out.string().c_str());
}

}  // namespace

void add_gen_data(CLI::App& root, Action& action) {
  auto opt = std::make_shared<GenDataOptions>();
  auto* cmd = root.add_subcommand("gen-data", "Simulate open-loop excitation and write a windowed dataset");
  cmd->add_option("--config", opt->configs, "Key-value config file(s); later files override earlier ones")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opt->out, "Output dataset directory (replaced if present)")->required();
  cmd->add_option("--seed", opt->seed, "Excitation and noise seed (overrides excitation.seed)");
  cmd->add_option("--duration-s", opt->duration, "Total simulated seconds across power levels");
  cmd->add_option("--stride", opt->stride, "Window stride in samples");
  cmd->add_option("--jobs", opt->jobs, "Worker threads (default: THERMOLOOP_JOBS or all cores)");
  cmd->callback([opt, &action] { action = [opt] { run_gen_data(*opt); }; });
}

}  // namespace thermoloop::cli
