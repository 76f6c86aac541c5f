#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlf/dataset.hpp"
#include "hlf/error.hpp"
#include "hlf/model.hpp"
#include "hlf/synthgen.hpp"
#include "hlf/trainer.hpp"

namespace hlf {

inline constexpr int kConfigSchemaVersion = 1;

struct DataConfig {
  std::optional<std::string> path;  // CSV file; exclusive with `synth`
  std::optional<std::string> date_column;
  std::optional<SynthSpec> synth;
  SplitMode split_mode = SplitMode::ratio;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::size_t input_length = 96;
  std::size_t kernel = kDefaultKernel;
  TargetDecomposition target_decomposition = TargetDecomposition::per_window;
};

struct ModelConfig {
  bool share_channels = true;
  InitScheme init = InitScheme::uniform_average;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  std::vector<std::size_t> horizons{96, 192, 336, 720};
  std::string output_dir = "runs";
};

// ---------------------------------------------------------------------------
// SynthSpec <-> JSON
// ---------------------------------------------------------------------------

namespace detail {

// Typed access to one JSON object with "config.<key>"-style error paths.
class JsonReader {
public:
  JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string where(const char* key) const { return path_ + "." + key; }
  const nlohmann::json& raw(const char* key) const {
    seen_.insert(key);
    return j_.at(key);
  }

  static bool non_negative_integer(const nlohmann::json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }

  template <class T>
  T get(const char* key) const {
    if (!has(key)) throw ConfigError(where(key) + ": missing");
    const auto& v = raw(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(where(key) + ": expected a boolean");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!non_negative_integer(v)) {
          throw ConfigError(where(key) + ": expected a non-negative integer");
        }
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
      } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
        if (!v.is_array() || !std::all_of(v.begin(), v.end(), non_negative_integer)) {
          throw ConfigError(where(key) + ": expected an array of non-negative integers");
        }
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <class T>
  void maybe(const char* key, T& dst) const {
    if (has(key)) dst = get<T>(key);
  }

  void reject_unknown() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + "." + key + ": unknown key");
    }
  }

private:
  const nlohmann::json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

}  // namespace detail

inline nlohmann::json synth_to_json(const SynthSpec& s) {
  nlohmann::json trend;
  switch (s.trend.kind) {
    case TrendKind::none: trend = {{"kind", "none"}}; break;
    case TrendKind::linear: trend = {{"kind", "linear"}, {"slope", s.trend.slope}}; break;
    case TrendKind::piecewise:
      trend = {{"kind", "piecewise"}, {"breaks", s.trend.breaks}, {"slopes", s.trend.slopes}};
      break;
  }
  nlohmann::json seasonal = nlohmann::json::array();
  for (const auto& t : s.seasonal) {
    seasonal.push_back({{"amplitude", t.amplitude}, {"period", t.period}, {"phase", t.phase}});
  }
  return {{"length", s.length},       {"channels", s.channels}, {"trend", trend},
          {"seasonal", seasonal},     {"noise_std", s.noise_std}, {"seed", s.seed}};
}

inline SynthSpec synth_from_json(const nlohmann::json& j, const std::string& path = "synth") {
  detail::JsonReader r(j, path);
  SynthSpec s;
  r.maybe("length", s.length);
  r.maybe("channels", s.channels);
  r.maybe("noise_std", s.noise_std);
  r.maybe("seed", s.seed);
  if (r.has("trend")) {
    detail::JsonReader t(r.raw("trend"), r.where("trend"));
    const auto kind = t.get<std::string>("kind");
    if (kind == "none") {
      s.trend.kind = TrendKind::none;
    } else if (kind == "linear") {
      s.trend.kind = TrendKind::linear;
      s.trend.slope = t.get<double>("slope");
    } else if (kind == "piecewise") {
      s.trend.kind = TrendKind::piecewise;
      s.trend.breaks = t.get<std::vector<std::size_t>>("breaks");
      s.trend.slopes = t.get<std::vector<double>>("slopes");
    } else {
      throw ConfigError(t.where("kind") + ": unknown trend kind '" + kind + "'");
    }
    t.reject_unknown();
  }
  if (r.has("seasonal")) {
    const auto& arr = r.raw("seasonal");
    if (!arr.is_array()) throw ConfigError(r.where("seasonal") + ": expected an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      detail::JsonReader e(arr[k], r.where("seasonal") + "[" + std::to_string(k) + "]");
      SeasonalTerm term;
      e.maybe("amplitude", term.amplitude);
      e.maybe("period", term.period);
      e.maybe("phase", term.phase);
      e.reject_unknown();
      s.seasonal.push_back(term);
    }
  }
  r.reject_unknown();
  try {
    validate(s);
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// ExperimentConfig <-> JSON (one flat document)
// ---------------------------------------------------------------------------

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["schema_version"] = c.schema_version;
  if (c.data.path) j["path"] = *c.data.path;
  if (c.data.date_column) j["date_column"] = *c.data.date_column;
  if (c.data.synth) j["synth"] = synth_to_json(*c.data.synth);
  j["split_mode"] = to_string(c.data.split_mode);
  j["ratios"] = c.data.ratios;
  j["input_length"] = c.data.input_length;
  j["horizons"] = c.horizons;
  j["kernel"] = c.data.kernel;
  j["target_decomposition"] = to_string(c.data.target_decomposition);
  j["share_channels"] = c.model.share_channels;
  j["init"] = c.model.init == InitScheme::uniform_average ? "uniform_average" : "scaled_random";
  const auto& t = c.train;
  j["learning_rate"] = t.learning_rate;
  j["batch_size"] = t.batch_size;
  j["max_epochs"] = t.max_epochs;
  j["patience"] = t.patience;
  j["max_steps"] = t.max_steps;
  j["adam_beta1"] = t.adam_beta1;
  j["adam_beta2"] = t.adam_beta2;
  j["adam_eps"] = t.adam_eps;
  j["grad_clip"] = t.grad_clip;
  j["seed"] = t.seed;
  j["loss_variant"] = to_string(t.loss_variant);
  j["initial_w1"] = t.initial_w1;
  j["initial_alpha"] = t.initial_alpha;
  j["lambda1"] = t.lambda1;
  j["lambda2"] = t.lambda2;
  j["update_order"] = to_string(t.update_order);
  j["output_dir"] = c.output_dir;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  detail::JsonReader r(j, "config");
  ExperimentConfig c;
  c.schema_version = r.get<int>("schema_version");
  if (c.schema_version != kConfigSchemaVersion) {
    throw ConfigError("config.schema_version: unsupported version " +
                      std::to_string(c.schema_version));
  }
  if (r.has("path")) c.data.path = r.get<std::string>("path");
  if (r.has("date_column")) c.data.date_column = r.get<std::string>("date_column");
  if (r.has("synth")) c.data.synth = synth_from_json(r.raw("synth"), r.where("synth"));
  if (c.data.path.has_value() == c.data.synth.has_value()) {
    throw ConfigError("config: exactly one of 'path' and 'synth' must be given");
  }
  if (r.has("split_mode")) {
    try {
      c.data.split_mode = parse_split_mode(r.get<std::string>("split_mode"));
    } catch (const ConfigError& e) {
      throw ConfigError(r.where("split_mode") + ": " + e.what());
    }
  }
  if (r.has("ratios")) {
    const auto v = r.get<std::vector<double>>("ratios");
    if (v.size() != 3) throw ConfigError(r.where("ratios") + ": expected three numbers");
    c.data.ratios = {v[0], v[1], v[2]};
  }
  r.maybe("input_length", c.data.input_length);
  if (r.has("horizon")) c.horizons = {r.get<std::size_t>("horizon")};
  r.maybe("horizons", c.horizons);
  r.maybe("kernel", c.data.kernel);
  if (r.has("target_decomposition")) {
    try {
      c.data.target_decomposition =
          parse_target_decomposition(r.get<std::string>("target_decomposition"));
    } catch (const ConfigError& e) {
      throw ConfigError(r.where("target_decomposition") + ": " + e.what());
    }
  }
  r.maybe("share_channels", c.model.share_channels);
  if (r.has("init")) {
    const auto s = r.get<std::string>("init");
    if (s == "uniform_average") {
      c.model.init = InitScheme::uniform_average;
    } else if (s == "scaled_random") {
      c.model.init = InitScheme::scaled_random;
    } else {
      throw ConfigError(r.where("init") + ": unknown init scheme '" + s + "'");
    }
  }
  auto& t = c.train;
  r.maybe("learning_rate", t.learning_rate);
  r.maybe("batch_size", t.batch_size);
  r.maybe("max_epochs", t.max_epochs);
  r.maybe("patience", t.patience);
  r.maybe("max_steps", t.max_steps);
  r.maybe("adam_beta1", t.adam_beta1);
  r.maybe("adam_beta2", t.adam_beta2);
  r.maybe("adam_eps", t.adam_eps);
  r.maybe("grad_clip", t.grad_clip);
  r.maybe("seed", t.seed);
  if (r.has("loss_variant")) {
    try {
      t.loss_variant = parse_loss_variant(r.get<std::string>("loss_variant"));
    } catch (const ConfigError& e) {
      throw ConfigError(r.where("loss_variant") + ": " + e.what());
    }
  }
  r.maybe("initial_w1", t.initial_w1);
  r.maybe("initial_alpha", t.initial_alpha);
  r.maybe("lambda1", t.lambda1);
  r.maybe("lambda2", t.lambda2);
  if (r.has("update_order")) {
    try {
      t.update_order = parse_update_order(r.get<std::string>("update_order"));
    } catch (const ConfigError& e) {
      throw ConfigError(r.where("update_order") + ": " + e.what());
    }
  }
  r.maybe("output_dir", c.output_dir);
  r.reject_unknown();

  if (c.horizons.empty()) throw ConfigError("config.horizons: must not be empty");
  for (auto h : c.horizons) {
    if (h < 1) throw ConfigError("config.horizons: horizons must be positive");
  }
  if (c.data.input_length < 1) throw ConfigError("config.input_length: must be positive");
  try {
    validate_kernel(c.data.kernel);
  } catch (const Error& e) {
    throw ConfigError(std::string("config.kernel: ") + e.what());
  }
  try {
    validate(SplitSpec{c.data.split_mode, c.data.ratios, c.data.input_length, c.horizons[0]});
    validate(c.train);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace hlf
