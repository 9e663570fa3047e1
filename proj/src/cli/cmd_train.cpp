// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <memory>

#include "common.hpp"
#include "thermoloop/checkpoint.hpp"
#include "thermoloop/csv.hpp"
#include "thermoloop/train.hpp"

namespace thermoloop::cli {
namespace {

struct TrainOptions {
  std::filesystem::path data;
  std::vector<std::filesystem::path> configs;
  std::filesystem::path out;
  bool no_physics = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> lambda;
  std::size_t jobs = 0;
};

void run_train(const TrainOptions& opt) {
  // The dataset's own echo supplies the plant constants it was made with.
  std::vector<std::filesystem::path> layers;
  if (const auto echo = opt.data / "effective_config.txt"; std::filesystem::exists(echo)) layers.push_back(echo);
  layers.insert(layers.end(), opt.configs.begin(), opt.configs.end());
  KeyValueConfig kv = load_configs(layers);
  if (opt.seed) kv.set("train.seed", std::to_string(*opt.seed));
  if (opt.epochs) kv.set("train.epochs", std::to_string(*opt.epochs));
  if (opt.lambda) kv.set("train.lambda", format_double(*opt.lambda));
  if (opt.no_physics) kv.set("train.lambda", "0");

  const auto ds = datagen::load_dataset(opt.data);
  const auto plant_cfg = plant::plant_config_from(kv);
  auto cfg = train::train_config_from(kv);
  cfg.physics = plant_cfg.constants;
  cfg.sample_period = plant_cfg.sample_period;
  cfg.jobs = resolve_jobs(opt.jobs);
  pigru::ModelDims dims{ds.history_len, ds.horizon};
  dims = train::model_dims_from(kv, dims);

  KeyValueConfig effective;
  plant::write_plant_config(effective, plant_cfg);
  train::write_train_config(effective, cfg);
  train::write_model_dims(effective, dims);
  effective.set("train.data", opt.data.string());

  const auto res = train::fit(ds, dims, cfg);
  save_checkpoint({dims, res.model.normalization, res.model.params}, opt.out);
  write_file_atomic(sidecar(opt.out, "log.csv"), train::training_log_csv(res.batches));
  write_file_atomic(sidecar(opt.out, "epochs.csv"), train::epoch_log_csv(res.epochs));
  write_config_echo(sidecar(opt.out, "effective_config.txt"), effective);

  std::printf("epoch,train_total,val_data_loss,lr,lambda_eff\n");
  for (const auto& e : res.epochs)
    std::printf("%zu,%s,%s,%s,%s\n", e.epoch, format_double(e.train.total).c_str(),
                format_double(e.validation_data_loss).c_str(), format_double(e.learning_rate).c_str(),
                format_double(e.train.lambda_eff).c_str());
  std::printf("%s model (lambda %s, %zu parameters) -> %s\n", cfg.lambda == 0.0 ? "data-only" : "physics-informed",
              format_double(cfg.lambda).c_str(), res.model.params.parameter_count(), opt.out.string().c_str());
}

}  // namespace

void add_train(CLI::App& root, Action& action) {
  auto opt = std::make_shared<TrainOptions>();
  auto* cmd = root.add_subcommand("train", "Train the recurrent predictor on a dataset");
  cmd->add_option("--data", opt->data, "Dataset directory written by gen-data")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--config", opt->configs, "Key-value config file(s) with train./model. keys")->check(CLI::ExistingFile);
  cmd->add_option("--out", opt->out, "Checkpoint path; logs are written next to it")->required();
  cmd->add_flag("--no-physics", opt->no_physics, "Force lambda = 0 (data-only ablation)");
  cmd->add_option("--seed", opt->seed, "Initialisation and shuffling seed");
  cmd->add_option("--epochs", opt->epochs, "Number of epochs");
  cmd->add_option("--lambda", opt->lambda, "Physics loss weight in [0, 1)");
  cmd->add_option("--jobs", opt->jobs, "Worker threads (default: THERMOLOOP_JOBS or all cores)");
  cmd->callback([opt, &action] { action = [opt] { run_train(*opt); }; });
}

}  // namespace thermoloop::cli
