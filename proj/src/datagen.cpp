// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/datagen.hpp"

#include <charconv>
#include <cmath>
#include <random>

#include <json.hpp>

#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"
#include "thermoloop/parallel.hpp"
#include "thermoloop/rng.hpp"

namespace thermoloop::datagen {

void ExcitationSpec::validate() const {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw ConfigError("excitation duration must be >= 0");
  if (!(current_range.lo <= current_range.hi))
    throw ConfigError("excitation current range: min > max");
  if (!(update_freq_range.lo <= update_freq_range.hi))
    throw ConfigError("excitation update frequency range: min > max");
  if (!(update_freq_range.lo > 0.0)) throw ConfigError("excitation update frequencies must be > 0");
  if (power_levels.empty()) throw ConfigError("excitation needs at least one power level");
  for (double p : power_levels)
    if (!(p >= 0.0)) throw ConfigError("power levels must be >= 0");
}

std::vector<double> generate_excitation(const ExcitationSpec& spec, std::size_t samples,
                                        double sample_period, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(spec.update_freq_range.lo, spec.update_freq_range.hi);
  std::uniform_real_distribution<double> level(spec.current_range.lo, spec.current_range.hi);

  std::vector<double> out;
  out.reserve(samples);
  while (out.size() < samples) {
    const double f = spec.update_freq_range.lo == spec.update_freq_range.hi
                         ? spec.update_freq_range.lo
                         : freq(rng);
    const auto hold = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(1.0 / (f * sample_period))));
    const double value =
        spec.current_range.lo == spec.current_range.hi ? spec.current_range.lo : level(rng);
    for (std::size_t i = 0; i < hold && out.size() < samples; ++i) out.push_back(value);
  }
  return out;
}

std::vector<double> generate_excitation(const ExcitationSpec& spec, double sample_period) {
  const auto samples = static_cast<std::size_t>(std::llround(spec.duration / sample_period));
  return generate_excitation(spec, samples, sample_period, spec.seed);
}

std::vector<SampleWindow> window_trajectory(std::span<const double> temps,
                                            std::span<const double> currents, std::size_t n,
                                            std::size_t m, std::size_t stride) {
  if (temps.size() != currents.size())
    throw SizingError("window_trajectory: " + std::to_string(temps.size()) + " temperatures vs " +
                      std::to_string(currents.size()) + " currents");
  if (n == 0 || m == 0 || stride == 0) throw SizingError("window_trajectory: n, m and stride must be >= 1");
  if (temps.size() < n + m)
    throw SizingError("window_trajectory: sequence of " + std::to_string(temps.size()) +
                      " samples is shorter than n + m = " + std::to_string(n + m));

  const std::size_t count = (temps.size() - n - m) / stride + 1;
  std::vector<SampleWindow> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t s = k * stride;
    SampleWindow w;
    w.history_temps.assign(temps.begin() + s, temps.begin() + s + n);
    w.control_currents.assign(currents.begin() + s + n, currents.begin() + s + n + m);
    w.target_temps.assign(temps.begin() + s + n, temps.begin() + s + n + m);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::size_t> Dataset::train_indices() const {
  std::vector<std::size_t> out;
  std::size_t base = 0;
  for (const auto& t : trajectories) {
    for (std::size_t i = 0; i < t.train_windows; ++i) out.push_back(base + i);
    base += t.train_windows + t.validation_windows;
  }
  return out;
}

std::vector<std::size_t> Dataset::validation_indices() const {
  std::vector<std::size_t> out;
  std::size_t base = 0;
  for (const auto& t : trajectories) {
    for (std::size_t i = 0; i < t.validation_windows; ++i) out.push_back(base + t.train_windows + i);
    base += t.train_windows + t.validation_windows;
  }
  return out;
}

Normalization compute_normalization(std::span<const SampleWindow> windows,
                                    std::span<const std::size_t> indices, Bounds current_range) {
  Normalization norm;
  norm.current_scale = std::max(std::abs(current_range.lo), std::abs(current_range.hi));
  if (!(norm.current_scale > 0.0)) norm.current_scale = 1.0;
  if (indices.empty()) return norm;

  // Two passes for accuracy; temperatures sit near 300 K with mK spread.
  double sum = 0.0;
  std::size_t count = 0;
  for (auto i : indices) {
    for (double t : windows[i].history_temps) sum += t;
    for (double t : windows[i].target_temps) sum += t;
    count += windows[i].history_temps.size() + windows[i].target_temps.size();
  }
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (auto i : indices) {
    for (double t : windows[i].history_temps) sq += (t - mean) * (t - mean);
    for (double t : windows[i].target_temps) sq += (t - mean) * (t - mean);
  }
  norm.temp_mean = mean;
  norm.temp_std = std::sqrt(sq / static_cast<double>(count));
  if (!(norm.temp_std > 0.0)) norm.temp_std = 1.0;
  return norm;
}

namespace {

struct LevelResult {
  TrajectoryInfo info;
  std::vector<SampleWindow> train;
  std::vector<SampleWindow> validation;
};

LevelResult build_level(const ExcitationSpec& spec, const plant::PlantConfig& base_cfg,
                        const BuildOptions& opt, std::size_t level, std::size_t samples) {
  plant::PlantConfig cfg = base_cfg;
  cfg.laser_power = spec.power_levels[level];

  const auto currents = generate_excitation(spec, samples, cfg.sample_period,
                                            derive_seed(spec.seed, 2 * level));
  std::vector<plant::Sample> traj;
  try {
    traj = plant::simulate(plant::PlantState{cfg.constants.hot_side_temp, 0.0}, currents, cfg,
                           derive_seed(spec.seed, 2 * level + 1));
  } catch (const DivergenceError& e) {
    throw DivergenceError("build_dataset: power level " + format_double(cfg.laser_power) +
                          " W: " + e.what());
  }

  LevelResult out;
  out.info.power = cfg.laser_power;
  std::size_t keep = traj.size();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!cfg.temp_bounds.contains(traj[i].temp_true)) {
      keep = i;
      out.info.truncated = true;
      break;
    }
  }
  out.info.samples = keep;

  const std::size_t span = opt.history_len + opt.horizon;
  if (keep < span) return out;

  std::vector<double> temps(keep);
  std::vector<double> amps(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    temps[i] = traj[i].temp_meas;
    amps[i] = traj[i].current;
  }
  auto windows = window_trajectory(temps, amps, opt.history_len, opt.horizon, opt.stride);

  // Contiguous tail block for validation; drop the windows that would share
  // samples with it.
  const std::size_t total = windows.size();
  const auto n_val = static_cast<std::size_t>(std::floor(opt.validation_fraction * static_cast<double>(total)));
  if (n_val == 0) {
    out.train = std::move(windows);
  } else {
    const std::size_t val_begin = total - n_val;
    const std::size_t gap = (span + opt.stride - 1) / opt.stride;  // windows overlapping val_begin
    const std::size_t train_end = val_begin >= gap ? val_begin - gap + 1 : 0;
    out.train.assign(std::make_move_iterator(windows.begin()),
                     std::make_move_iterator(windows.begin() + static_cast<std::ptrdiff_t>(train_end)));
    out.validation.assign(std::make_move_iterator(windows.begin() + static_cast<std::ptrdiff_t>(val_begin)),
                          std::make_move_iterator(windows.end()));
  }
  out.info.train_windows = out.train.size();
  out.info.validation_windows = out.validation.size();
  return out;
}

}  // namespace

Dataset build_dataset(const ExcitationSpec& spec, const plant::PlantConfig& plant_cfg,
                      const BuildOptions& options) {
  spec.validate();
  plant_cfg.validate();
  if (options.history_len == 0 || options.horizon == 0 || options.stride == 0)
    throw ConfigError("history_len, horizon and stride must be >= 1");
  if (!(options.validation_fraction >= 0.0 && options.validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in [0, 1)");

  const std::size_t levels = spec.power_levels.size();
  const auto per_level = static_cast<std::size_t>(
      std::llround(spec.duration / static_cast<double>(levels) / plant_cfg.sample_period));

  std::vector<LevelResult> results(levels);
  parallel_for(levels, options.jobs, [&](std::size_t i) {
    results[i] = build_level(spec, plant_cfg, options, i, per_level);
  });

  Dataset ds;
  ds.history_len = options.history_len;
  ds.horizon = options.horizon;
  ds.stride = options.stride;
  ds.spec = spec;
  for (auto& r : results) {
    ds.trajectories.push_back(r.info);
    for (auto& w : r.train) ds.windows.push_back(std::move(w));
    for (auto& w : r.validation) ds.windows.push_back(std::move(w));
  }
  const auto train = ds.train_indices();
  ds.normalization = compute_normalization(ds.windows, train, spec.current_range);
  return ds;
}

// --- persistence -----------------------------------------------------------

namespace {

constexpr const char* kCsvName = "dataset.csv";
constexpr const char* kMetaName = "dataset.meta.json";

void append_rows(std::string& out, std::size_t id, const char* role, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += std::to_string(id);
    out += ',';
    out += role;
    out += ',';
    out += std::to_string(i);
    out += ',';
    append_double(out, values[i]);
    out += '\n';
  }
}

nlohmann::json spec_json(const ExcitationSpec& s) {
  return {{"duration_s", s.duration},
          {"current_min_A", s.current_range.lo},
          {"current_max_A", s.current_range.hi},
          {"update_freq_min_Hz", s.update_freq_range.lo},
          {"update_freq_max_Hz", s.update_freq_range.hi},
          {"power_levels_W", s.power_levels},
          {"seed", s.seed}};
}

ExcitationSpec spec_from_json(const nlohmann::json& j) {
  ExcitationSpec s;
  s.duration = j.at("duration_s").get<double>();
  s.current_range = {j.at("current_min_A").get<double>(), j.at("current_max_A").get<double>()};
  s.update_freq_range = {j.at("update_freq_min_Hz").get<double>(), j.at("update_freq_max_Hz").get<double>()};
  s.power_levels = j.at("power_levels_W").get<std::vector<double>>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  nlohmann::json meta;
  meta["format"] = "thermoloop-dataset";
  meta["version"] = 1;
  meta["history_len"] = ds.history_len;
  meta["horizon"] = ds.horizon;
  meta["stride"] = ds.stride;
  meta["window_count"] = ds.windows.size();
  meta["normalization"] = {{"temp_mean_K", ds.normalization.temp_mean},
                           {"temp_std_K", ds.normalization.temp_std},
                           {"current_scale_A", ds.normalization.current_scale}};
  meta["spec"] = spec_json(ds.spec);
  meta["seed"] = ds.spec.seed;
  auto& trajs = meta["trajectories"] = nlohmann::json::array();
  for (const auto& t : ds.trajectories) {
    trajs.push_back({{"power_W", t.power},
                     {"samples", t.samples},
                     {"truncated", t.truncated},
                     {"train_windows", t.train_windows},
                     {"validation_windows", t.validation_windows}});
  }

  AtomicFile csv(dir / kCsvName);
  std::string chunk = "window_id,role,idx,value\n";
  for (std::size_t id = 0; id < ds.windows.size(); ++id) {
    const auto& w = ds.windows[id];
    append_rows(chunk, id, "hist_T", w.history_temps);
    append_rows(chunk, id, "ctrl_I", w.control_currents);
    append_rows(chunk, id, "tgt_T", w.target_temps);
    if (chunk.size() > (1u << 20)) {
      csv.stream() << chunk;
      chunk.clear();
    }
  }
  csv.stream() << chunk;
  AtomicFile meta_file(dir / kMetaName);
  meta_file.stream() << meta.dump(2) << '\n';
  csv.commit();
  meta_file.commit();
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / kMetaName));
    if (meta.at("format") != "thermoloop-dataset" || meta.at("version") != 1)
      throw ParseError("unsupported dataset metadata format", 1);
    ds.history_len = meta.at("history_len").get<std::size_t>();
    ds.horizon = meta.at("horizon").get<std::size_t>();
    ds.stride = meta.at("stride").get<std::size_t>();
    const auto& norm = meta.at("normalization");
    ds.normalization = {norm.at("temp_mean_K").get<double>(), norm.at("temp_std_K").get<double>(),
                        norm.at("current_scale_A").get<double>()};
    ds.spec = spec_from_json(meta.at("spec"));
    for (const auto& t : meta.at("trajectories")) {
      ds.trajectories.push_back({t.at("power_W").get<double>(), t.at("samples").get<std::size_t>(),
                                 t.at("truncated").get<bool>(), t.at("train_windows").get<std::size_t>(),
                                 t.at("validation_windows").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset metadata: ") + e.what(), 1);
  }
  const auto expected = meta.at("window_count").get<std::size_t>();

  const std::string text = read_file(dir / kCsvName);
  std::string_view rest = text;
  std::size_t line_no = 0;
  bool header_seen = false;
  ds.windows.reserve(expected);

  auto next_line = [&]() -> std::optional<std::string_view> {
    while (!rest.empty()) {
      ++line_no;
      const auto nl = rest.find('\n');
      std::string_view line = rest.substr(0, nl);
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return line;
    }
    return std::nullopt;
  };

  while (auto line = next_line()) {
    if (!header_seen) {
      if (*line != "window_id,role,idx,value") throw ParseError("bad dataset CSV header", line_no);
      header_seen = true;
      continue;
    }
    const auto cells = split_csv_line(*line);
    if (cells.size() != 4)
      throw ParseError("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " fields, expected 4",
                       line_no);
    std::size_t id = 0;
    std::size_t idx = 0;
    if (std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), id).ec != std::errc{} ||
        std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), idx).ec != std::errc{})
      throw ParseError("row " + std::to_string(line_no) + ": bad window_id or idx", line_no);
    double value = 0.0;
    try {
      value = parse_double(cells[3]);
    } catch (const InvalidInputError& e) {
      throw ParseError("row " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (id == ds.windows.size()) ds.windows.emplace_back();
    if (id + 1 != ds.windows.size())
      throw ParseError("row " + std::to_string(line_no) + ": window ids must be contiguous", line_no);
    auto& w = ds.windows.back();
    std::vector<double>* target = nullptr;
    if (cells[1] == "hist_T") target = &w.history_temps;
    else if (cells[1] == "ctrl_I") target = &w.control_currents;
    else if (cells[1] == "tgt_T") target = &w.target_temps;
    else throw ParseError("row " + std::to_string(line_no) + ": unknown role '" + std::string(cells[1]) + "'", line_no);
    if (idx != target->size())
      throw ParseError("row " + std::to_string(line_no) + ": idx out of sequence", line_no);
    target->push_back(value);
  }
  if (!header_seen) throw ParseError("empty dataset CSV", 1);
  if (ds.windows.size() != expected)
    throw ParseError("dataset has " + std::to_string(ds.windows.size()) + " windows, metadata says " +
                         std::to_string(expected),
                     line_no);
  for (std::size_t id = 0; id < ds.windows.size(); ++id) {
    const auto& w = ds.windows[id];
    if (w.history_temps.size() != ds.history_len || w.control_currents.size() != ds.horizon ||
        w.target_temps.size() != ds.horizon)
      throw ParseError("window " + std::to_string(id) + " is incomplete", line_no);
  }
  return ds;
}

ExcitationSpec excitation_spec_from(const KeyValueConfig& kv, ExcitationSpec base) {
  static const std::vector<std::string_view> known = {
      "duration_s", "current_min_A", "current_max_A", "update_freq_min_Hz", "update_freq_max_Hz",
      "power_levels_W", "seed"};
  if (auto unknown = kv.unknown_keys("excitation", known); !unknown.empty())
    throw ConfigError("unknown config key " + unknown.front());
  ExcitationSpec s = base;
  s.duration = kv.get_double("excitation.duration_s", s.duration);
  s.current_range.lo = kv.get_double("excitation.current_min_A", s.current_range.lo);
  s.current_range.hi = kv.get_double("excitation.current_max_A", s.current_range.hi);
  s.update_freq_range.lo = kv.get_double("excitation.update_freq_min_Hz", s.update_freq_range.lo);
  s.update_freq_range.hi = kv.get_double("excitation.update_freq_max_Hz", s.update_freq_range.hi);
  s.power_levels = kv.get_doubles("excitation.power_levels_W", s.power_levels);
  s.seed = kv.get_u64("excitation.seed", s.seed);
  s.validate();
  return s;
}

void write_excitation_spec(KeyValueConfig& kv, const ExcitationSpec& s) {
  kv.set("excitation.duration_s", format_double(s.duration));
  kv.set("excitation.current_min_A", format_double(s.current_range.lo));
  kv.set("excitation.current_max_A", format_double(s.current_range.hi));
  kv.set("excitation.update_freq_min_Hz", format_double(s.update_freq_range.lo));
  kv.set("excitation.update_freq_max_Hz", format_double(s.update_freq_range.hi));
  std::string levels;
  for (std::size_t i = 0; i < s.power_levels.size(); ++i) {
    if (i) levels += ", ";
    levels += format_double(s.power_levels[i]);
  }
  kv.set("excitation.power_levels_W", levels);
  kv.set("excitation.seed", std::to_string(s.seed));
}

}  // namespace thermoloop::datagen
