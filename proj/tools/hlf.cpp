// Command-line front end: decompose | train | ablate | synth | eval.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hlf/hlf.hpp"

namespace {

// HLF_LOG_LEVEL: 0 = quiet, 1 = info (default), 2 = debug.
int log_level() {
  static const int level = [] {
    const char* v = std::getenv("HLF_LOG_LEVEL");
    return v ? std::atoi(v) : 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::clog << "[hlf] " << msg << '\n';
}

void fail_json(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw hlf::LoadError("cannot write '" + path + "'");
  out << text << '\n';
}

hlf::ExperimentConfig load_with_overrides(const std::string& path,
                                          const std::optional<std::string>& output,
                                          const std::optional<std::uint64_t>& seed) {
  auto cfg = hlf::load_config(path);
  if (output) cfg.output_dir = *output;
  if (seed) {
    cfg.train.seed = *seed;
    if (cfg.data.synth) cfg.data.synth->seed = *seed;
  }
  return cfg;
}

void cmd_decompose(const std::string& input, std::size_t kernel, const std::string& output,
                   const std::optional<std::string>& date_column) {
  const auto series = hlf::load_csv(input, hlf::CsvOptions{date_column, false});
  const auto pair = hlf::moving_average_decompose(series, kernel);
  std::ofstream file;
  if (!output.empty() && output != "-") {
    file.open(output);
    if (!file) throw hlf::LoadError("cannot write '" + output + "'");
  }
  std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  const bool dated = !series.timestamps.empty();
  if (dated) out << "date";
  for (std::size_t c = 0; c < series.channels(); ++c) {
    const auto& n = series.channel_names[c];
    out << (c || dated ? "," : "") << n << ',' << n << "_seasonal," << n << "_trend";
  }
  out << '\n';
  out.precision(17);
  for (std::size_t t = 0; t < series.length(); ++t) {
    if (dated) out << series.timestamps[t];
    for (std::size_t c = 0; c < series.channels(); ++c) {
      out << (c || dated ? "," : "") << series.values(t, c) << ',' << pair.seasonal(t, c) << ','
          << pair.trend(t, c);
    }
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decomposition-based forecasting with a dual min-max hybrid loss"};
  app.require_subcommand(1);

  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
  std::string config_path;
  std::size_t jobs = 1;

  // decompose
  auto* dec = app.add_subcommand("decompose", "Write original/seasonal/trend columns per channel");
  std::string dec_input, dec_output = "-";
  std::size_t dec_kernel = hlf::kDefaultKernel;
  std::optional<std::string> dec_date;
  dec->add_option("--input,-i", dec_input, "Input CSV")->required();
  dec->add_option("--kernel,-k", dec_kernel, "Odd moving-average window")->capture_default_str();
  dec->add_option("--output,-o", dec_output, "Output CSV ('-' for stdout)");
  dec->add_option("--date-column", dec_date, "Name of the timestamp column");

  // train / ablate share flags
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config,-c", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--output,-o", output, "Output directory (overrides config)");
    sub->add_option("--seed", seed, "Seed (overrides config)");
    sub->add_option("--horizon", horizon, "Run only this horizon");
    sub->add_option("--jobs,-j", jobs, "Runs to execute concurrently")->capture_default_str();
  };
  auto* trn = app.add_subcommand("train", "Train one model per horizon and aggregate metrics");
  add_run_flags(trn);
  auto* abl = app.add_subcommand("ablate", "Loss-variant and initial-weight ablations");
  add_run_flags(abl);

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic series as CSV");
  std::string syn_spec, syn_output = "-";
  syn->add_option("--spec,-s", syn_spec, "Synthetic series spec (JSON)")->required();
  syn->add_option("--output,-o", syn_output, "Output CSV ('-' for stdout)");
  syn->add_option("--seed", seed, "Seed (overrides spec)");

  // eval
  auto* evl = app.add_subcommand("eval", "Overall/seasonal/trend MSE and MAE");
  std::string eval_ckpt, eval_forecast, eval_dump, eval_output = "-";
  evl->add_option("--config,-c", config_path, "Experiment config (with --checkpoint)");
  evl->add_option("--checkpoint", eval_ckpt, "Model checkpoint to evaluate on the test split");
  evl->add_option("--forecast", eval_forecast, "Forecast CSV to score instead of a checkpoint");
  evl->add_option("--dump-forecast", eval_dump, "Also write the test-split forecasts as CSV");
  evl->add_option("--output,-o", eval_output, "Metrics JSON destination ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail_json("usage_error", e.what());
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*dec) {
      cmd_decompose(dec_input, dec_kernel, dec_output, dec_date);
    } else if (*trn) {
      const auto cfg = load_with_overrides(config_path, output, seed);
      log_info("train: " + std::to_string(horizon ? 1 : cfg.horizons.size()) + " horizon(s), " +
               "output " + cfg.output_dir);
      const auto agg = hlf::run_train(cfg, horizon, {}, jobs);
      std::cout << agg.dump(2) << '\n';
    } else if (*abl) {
      const auto cfg = load_with_overrides(config_path, output, seed);
      log_info("ablate: output " + cfg.output_dir);
      const auto rep = hlf::run_ablate(cfg, horizon, {}, jobs);
      std::cout << rep.dump(2) << '\n';
    } else if (*syn) {
      std::ifstream in(syn_spec);
      if (!in) throw hlf::LoadError("cannot open spec '" + syn_spec + "'");
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw hlf::ConfigError("spec '" + syn_spec + "': " + e.what());
      }
      auto spec = hlf::synth_from_json(j);
      if (seed) spec.seed = *seed;
      const auto series = hlf::generate(spec);
      if (syn_output.empty() || syn_output == "-") {
        hlf::write_csv(std::cout, series);
      } else {
        std::ofstream out(syn_output);
        if (!out) throw hlf::LoadError("cannot write '" + syn_output + "'");
        hlf::write_csv(out, series);
      }
    } else if (*evl) {
      hlf::MetricsReport rep;
      if (!eval_forecast.empty()) {
        std::ifstream in(eval_forecast);
        if (!in) throw hlf::LoadError("cannot open '" + eval_forecast + "'");
        const auto [out, batch] = hlf::read_forecast_csv(in);
        rep = hlf::report(out, batch);
      } else {
        if (config_path.empty() || eval_ckpt.empty()) {
          throw hlf::ConfigError("eval needs --forecast, or --config with --checkpoint");
        }
        const auto cfg = hlf::load_config(config_path);
        const auto cp = hlf::load_checkpoint(eval_ckpt);
        rep = hlf::evaluate_checkpoint(cfg, cp);
        if (!eval_dump.empty()) {
          const auto raw = hlf::load_source(cfg.data);
          const auto& s = cp.model.shape;
          const auto prepared = hlf::prepare(raw, cfg.data, s.horizon);
          const hlf::WindowSet test(prepared.standardized, prepared.ranges.test, s.input_length,
                                    s.horizon, s.kernel, cfg.data.target_decomposition);
          std::ofstream dump(eval_dump);
          if (!dump) throw hlf::LoadError("cannot write '" + eval_dump + "'");
          for (std::size_t first = 0; first < test.size(); first += hlf::kEvalChunk) {
            const auto count = std::min(hlf::kEvalChunk, test.size() - first);
            const auto batch = test.range(first, count);
            hlf::write_forecast_csv(dump, hlf::forward(cp.model, batch.inputs), batch, first,
                                    first == 0);
          }
        }
      }
      write_text(eval_output, hlf::metrics_to_json(rep).dump(2));
    }
  } catch (const hlf::Error& e) {
    fail_json(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    fail_json("error", e.what());
    return 1;
  }
  return 0;
}
