#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hlf/checkpoint.hpp"
#include "hlf/config.hpp"
#include "hlf/dataset.hpp"
#include "hlf/metrics.hpp"
#include "hlf/model.hpp"
#include "hlf/synthgen.hpp"
#include "hlf/trainer.hpp"

namespace hlf {

// ---------------------------------------------------------------------------
// Data preparation
// ---------------------------------------------------------------------------

inline TimeSeries load_source(const DataConfig& d) {
  if (d.synth) return generate(*d.synth);
  if (!d.path) throw ConfigError("config: no data source");
  return load_csv(*d.path, CsvOptions{d.date_column, true});
}

struct PreparedData {
  TimeSeries standardized;
  SplitRanges ranges;
  StandardizationStats stats;
};

// Splits with the benchmark conventions and standardizes every row with
// statistics from the training rows only.
inline PreparedData prepare(const TimeSeries& raw, const DataConfig& d, std::size_t horizon) {
  const SplitSpec spec{d.split_mode, d.ratios, d.input_length, horizon};
  const auto ranges = split(raw, spec);
  auto stats = fit_standardizer(raw, ranges.train);
  return {standardize(raw, stats), ranges, std::move(stats)};
}

struct WindowSets {
  WindowSet train, val, test;
};

inline WindowSets make_window_sets(const PreparedData& p, const DataConfig& d,
                                   std::size_t horizon) {
  const auto make = [&](RowRange r) {
    return WindowSet(p.standardized, r, d.input_length, horizon, d.kernel,
                     d.target_decomposition);
  };
  return {make(p.ranges.train), make(p.ranges.val), make(p.ranges.test)};
}

// ---------------------------------------------------------------------------
// JSON views
// ---------------------------------------------------------------------------

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
  return {{"overall_mse", m.overall_mse},   {"overall_mae", m.overall_mae},
          {"seasonal_mse", m.seasonal_mse}, {"seasonal_mae", m.seasonal_mae},
          {"trend_mse", m.trend_mse},       {"trend_mae", m.trend_mae},
          {"horizon", m.horizon},           {"n_windows", m.n_windows}};
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  return {j.at("overall_mse").get<double>(),  j.at("overall_mae").get<double>(),
          j.at("seasonal_mse").get<double>(), j.at("seasonal_mae").get<double>(),
          j.at("trend_mse").get<double>(),    j.at("trend_mae").get<double>(),
          j.at("horizon").get<std::size_t>(), j.at("n_windows").get<std::size_t>()};
}

// ---------------------------------------------------------------------------
// Single runs
// ---------------------------------------------------------------------------

struct RunSpec {
  std::string label;  // unique within a sweep; used in output file names
  ExperimentConfig config;
  std::size_t horizon = 96;
};

struct RunOutcome {
  RunSpec spec;
  TrainResult result;
  MetricsReport test;
  nlohmann::json report;  // the RunReport document
};

struct RunOptions {
  bool write_files = true;
  bool record_wall_clock = true;
};

inline std::string run_stem(const RunSpec& r) {
  return r.label + "_H" + std::to_string(r.horizon);
}

inline RunOutcome run_one(const TimeSeries& raw, const RunSpec& spec, const RunOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = spec.config;
  const auto prepared = prepare(raw, cfg.data, spec.horizon);
  const auto sets = make_window_sets(prepared, cfg.data, spec.horizon);
  const ModelShape shape{cfg.data.input_length, spec.horizon, raw.channels(),
                         cfg.model.share_channels, cfg.data.kernel};
  auto model = init(shape, cfg.train.seed, cfg.model.init);

  RunOutcome out{spec, train(std::move(model), sets.train, sets.val, cfg.train), {}, {}};
  out.test = evaluate(out.result.model, sets.test);
  const auto val = evaluate(out.result.model, sets.val);

  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : out.result.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_overall_mse", e.train_overall_mse},
                      {"val_overall_mse", e.val_overall_mse}});
  }
  auto& rep = out.report;
  rep["schema_version"] = kConfigSchemaVersion;
  rep["label"] = spec.label;
  rep["horizon"] = spec.horizon;
  rep["config"] = config_to_json(cfg);
  rep["window_counts"] = {{"train", sets.train.size()},
                          {"val", sets.val.size()},
                          {"test", sets.test.size()}};
  rep["epochs"] = epochs;
  rep["best_epoch"] = out.result.best_epoch;
  rep["steps"] = out.result.steps;
  rep["loss_weights"] = weights_to_json(out.result.weights);
  rep["final_loss_weights"] = weights_to_json(out.result.final_weights);
  rep["validation"] = metrics_to_json(val);
  rep["test"] = metrics_to_json(out.test);

  if (opt.write_files) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const auto stem = run_stem(spec);
    const auto ckpt = (dir / ("checkpoint_" + stem + ".json")).string();
    const auto traj = (dir / ("trajectory_" + stem + ".csv")).string();
    save_checkpoint(ckpt, out.result.model, out.result.weights);
    std::ofstream tout(traj);
    if (!tout) throw LoadError("cannot write '" + traj + "'");
    write_trajectory_csv(tout, out.result.trajectory);
    rep["checkpoint"] = ckpt;
    rep["trajectory"] = traj;
  }
  if (opt.record_wall_clock) {
    rep["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  if (opt.write_files) {
    const auto path = std::filesystem::path(cfg.output_dir) / ("run_" + run_stem(spec) + ".json");
    std::ofstream rout(path);
    if (!rout) throw LoadError("cannot write '" + path.string() + "'");
    rout << rep.dump(2) << '\n';
  }
  return out;
}

// Runs every spec, `jobs` at a time. Results keep the order of `specs`.
inline std::vector<RunOutcome> run_all(const TimeSeries& raw, const std::vector<RunSpec>& specs,
                                       const RunOptions& opt = {}, std::size_t jobs = 1) {
  std::vector<RunOutcome> outcomes(specs.size());
  if (jobs <= 1 || specs.size() <= 1) {
    for (std::size_t k = 0; k < specs.size(); ++k) outcomes[k] = run_one(raw, specs[k], opt);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(specs.size());
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(jobs, specs.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t k; (k = next.fetch_add(1)) < specs.size();) {
        try {
          outcomes[k] = run_one(raw, specs[k], opt);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return outcomes;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

inline std::vector<std::size_t> filter_horizons(const ExperimentConfig& cfg,
                                                std::optional<std::size_t> only) {
  if (!only) return cfg.horizons;
  return {*only};
}

inline nlohmann::json summarize(const std::vector<RunOutcome>& runs) {
  nlohmann::json per = nlohmann::json::array();
  std::vector<MetricsReport> tests;
  for (const auto& r : runs) {
    per.push_back({{"label", r.spec.label},
                   {"horizon", r.spec.horizon},
                   {"best_epoch", r.result.best_epoch},
                   {"steps", r.result.steps},
                   {"test", metrics_to_json(r.test)}});
    tests.push_back(r.test);
  }
  return {{"runs", per}, {"mean", metrics_to_json(mean_report(tests))}};
}

// One training run per horizon plus the across-horizon mean of the test
// metrics. Writes aggregate.json when files are enabled.
inline nlohmann::json run_train(const ExperimentConfig& cfg,
                                std::optional<std::size_t> only_horizon = {},
                                const RunOptions& opt = {}, std::size_t jobs = 1) {
  const auto raw = load_source(cfg.data);
  std::vector<RunSpec> specs;
  for (auto h : filter_horizons(cfg, only_horizon)) {
    specs.push_back({to_string(cfg.train.loss_variant), cfg, h});
  }
  const auto runs = run_all(raw, specs, opt, jobs);
  nlohmann::json agg = summarize(runs);
  agg["schema_version"] = kConfigSchemaVersion;
  agg["config"] = config_to_json(cfg);
  if (opt.write_files) {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(std::filesystem::path(cfg.output_dir) / "aggregate.json");
    out << agg.dump(2) << '\n';
  }
  return agg;
}

struct GridPoint {
  double w1;
  double alpha;
};

// Initial-weight grid of the ablation: w1, alpha in {0.1, 0.9} plus the centre.
inline const std::array<GridPoint, 5> kInitialWeightGrid{
    {{0.1, 0.1}, {0.1, 0.9}, {0.5, 0.5}, {0.9, 0.1}, {0.9, 0.9}}};

inline const std::array<LossVariant, 3> kAblationVariants{
    LossVariant::hybrid, LossVariant::component_only, LossVariant::fixed_weight};

inline std::string grid_label(const GridPoint& g) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "grid_w1_%.1f_alpha_%.1f", g.w1, g.alpha);
  return buf;
}

// Builds the ablation sweep: the three loss variants and the five initial
// weight settings of the hybrid loss, each at every horizon. All runs share
// the data split and seed.
inline std::vector<RunSpec> ablation_specs(const ExperimentConfig& cfg,
                                           std::optional<std::size_t> only_horizon = {}) {
  std::vector<RunSpec> specs;
  const auto horizons = filter_horizons(cfg, only_horizon);
  for (auto v : kAblationVariants) {
    for (auto h : horizons) {
      RunSpec s{std::string("variant_") + to_string(v), cfg, h};
      s.config.train.loss_variant = v;
      specs.push_back(std::move(s));
    }
  }
  for (const auto& g : kInitialWeightGrid) {
    for (auto h : horizons) {
      RunSpec s{grid_label(g), cfg, h};
      s.config.train.loss_variant = LossVariant::hybrid;
      s.config.train.initial_w1 = g.w1;
      s.config.train.initial_alpha = g.alpha;
      specs.push_back(std::move(s));
    }
  }
  return specs;
}

inline nlohmann::json run_ablate(const ExperimentConfig& cfg,
                                 std::optional<std::size_t> only_horizon = {},
                                 const RunOptions& opt = {}, std::size_t jobs = 1) {
  const auto raw = load_source(cfg.data);
  const auto specs = ablation_specs(cfg, only_horizon);
  const auto runs = run_all(raw, specs, opt, jobs);

  // Group by label, keeping sweep order.
  nlohmann::json groups = nlohmann::json::array();
  std::vector<std::string> order;
  for (const auto& r : runs) {
    if (std::find(order.begin(), order.end(), r.spec.label) == order.end()) {
      order.push_back(r.spec.label);
    }
  }
  for (const auto& label : order) {
    std::vector<RunOutcome> subset;
    for (const auto& r : runs) {
      if (r.spec.label == label) subset.push_back(r);
    }
    auto s = summarize(subset);
    s["label"] = label;
    s["loss_variant"] = to_string(subset.front().spec.config.train.loss_variant);
    s["initial_w1"] = subset.front().spec.config.train.initial_w1;
    s["initial_alpha"] = subset.front().spec.config.train.initial_alpha;
    groups.push_back(std::move(s));
  }
  nlohmann::json out = {{"schema_version", kConfigSchemaVersion},
                        {"config", config_to_json(cfg)},
                        {"groups", groups}};
  if (opt.write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    std::ofstream jout(fs::path(cfg.output_dir) / "ablation.json");
    jout << out.dump(2) << '\n';
    std::ofstream csv(fs::path(cfg.output_dir) / "ablation.csv");
    csv.precision(17);
    csv << "label,loss_variant,initial_w1,initial_alpha,horizon,overall_mse,overall_mae,"
            "seasonal_mse,seasonal_mae,trend_mse,trend_mae,n_windows\n";
    for (const auto& r : runs) {
      const auto& t = r.spec.config.train;
      csv << r.spec.label << ',' << to_string(t.loss_variant) << ',' << t.initial_w1 << ','
           << t.initial_alpha << ',' << r.spec.horizon << ',' << r.test.overall_mse << ','
           << r.test.overall_mae << ',' << r.test.seasonal_mse << ',' << r.test.seasonal_mae
           << ',' << r.test.trend_mse << ',' << r.test.trend_mae << ',' << r.test.n_windows
           << '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation of saved artifacts
// ---------------------------------------------------------------------------

// Test-split metrics of a saved checkpoint under the config's data setup.
inline MetricsReport evaluate_checkpoint(const ExperimentConfig& cfg, const Checkpoint& cp) {
  const auto raw = load_source(cfg.data);
  const auto& s = cp.model.shape;
  if (s.channels != raw.channels() || s.input_length != cfg.data.input_length ||
      s.kernel != cfg.data.kernel) {
    throw ConfigError("checkpoint shape does not match the configured data");
  }
  const auto prepared = prepare(raw, cfg.data, s.horizon);
  const WindowSet test(prepared.standardized, prepared.ranges.test, s.input_length, s.horizon,
                       s.kernel, cfg.data.target_decomposition);
  return evaluate(cp.model, test);
}

inline constexpr const char* kForecastCsvHeader =
    "window,step,channel,target,target_seasonal,target_trend,seasonal_pred,trend_pred";

// One row per (window, step, channel); the combined forecast is not stored,
// it is always seasonal_pred + trend_pred.
inline void write_forecast_csv(std::ostream& out, const ForecastOutput& f, const WindowBatch& b,
                               std::size_t window_offset = 0, bool header = true) {
  if (header) out << kForecastCsvHeader << '\n';
  const auto old = out.precision(17);
  const auto& tgt = b.targets;
  for (std::size_t i = 0; i < tgt.n(); ++i) {
    for (std::size_t t = 0; t < tgt.steps(); ++t) {
      for (std::size_t c = 0; c < tgt.channels(); ++c) {
        out << window_offset + i << ',' << t << ',' << c << ',' << tgt(i, t, c) << ','
            << b.targets_seasonal(i, t, c) << ',' << b.targets_trend(i, t, c) << ','
            << f.seasonal_pred()(i, t, c) << ',' << f.trend_pred()(i, t, c) << '\n';
      }
    }
  }
  out.precision(old);
}

// Reads a forecast dump back into an output/batch pair. Windows, steps and
// channels must form a complete, ordered grid.
inline std::pair<ForecastOutput, WindowBatch> read_forecast_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kForecastCsvHeader) {
    throw InvalidData(std::string("forecast csv: header must be '") + kForecastCsvHeader + "'");
  }
  struct Row {
    std::size_t i, t, c;
    double v[5];
  };
  std::vector<Row> rows;
  std::size_t n = 0, steps = 0, channels = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 8) {
      throw InvalidData("forecast csv: line " + std::to_string(lineno) + " needs 8 cells");
    }
    Row r{};
    std::size_t* idx[3] = {&r.i, &r.t, &r.c};
    for (int k = 0; k < 3; ++k) {
      auto v = detail::parse_double(cells[k]);
      if (!v || *v < 0 || *v != std::floor(*v)) {
        throw InvalidData("forecast csv: bad index '" + cells[k] + "' on line " +
                          std::to_string(lineno));
      }
      *idx[k] = static_cast<std::size_t>(*v);
    }
    for (int k = 0; k < 5; ++k) {
      auto v = detail::parse_double(cells[3 + k]);
      if (!v) {
        throw InvalidData("forecast csv: cannot parse '" + cells[3 + k] + "' on line " +
                          std::to_string(lineno));
      }
      r.v[k] = *v;
    }
    n = std::max(n, r.i + 1);
    steps = std::max(steps, r.t + 1);
    channels = std::max(channels, r.c + 1);
    rows.push_back(r);
  }
  if (rows.empty()) throw InvalidData("forecast csv: no rows");
  if (rows.size() != n * steps * channels) {
    throw InvalidData("forecast csv: rows do not form a complete window x step x channel grid");
  }
  WindowBatch b{Tensor3(n, 0, channels), Tensor3(n, steps, channels), Tensor3(n, steps, channels),
                Tensor3(n, steps, channels)};
  Tensor3 sp(n, steps, channels), tp(n, steps, channels);
  std::vector<bool> seen(rows.size(), false);
  for (const auto& r : rows) {
    const auto flat = (r.i * steps + r.t) * channels + r.c;
    if (seen[flat]) throw InvalidData("forecast csv: duplicate cell");
    seen[flat] = true;
    b.targets(r.i, r.t, r.c) = r.v[0];
    b.targets_seasonal(r.i, r.t, r.c) = r.v[1];
    b.targets_trend(r.i, r.t, r.c) = r.v[2];
    sp(r.i, r.t, r.c) = r.v[3];
    tp(r.i, r.t, r.c) = r.v[4];
  }
  return {ForecastOutput(std::move(sp), std::move(tp)), std::move(b)};
}

}  // namespace hlf
