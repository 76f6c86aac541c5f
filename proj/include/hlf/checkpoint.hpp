#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "hlf/error.hpp"
#include "hlf/hybrid_loss.hpp"
#include "hlf/model.hpp"

namespace hlf {

inline constexpr const char* kCheckpointFormat = "hlf.linear_forecaster";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  LinearForecaster model;
  std::optional<LossWeights> weights;
};

inline nlohmann::json weights_to_json(const LossWeights& w) {
  return {{"w1", w.w1},         {"w2", w.w2},         {"alpha", w.alpha},
          {"beta", w.beta},     {"lambda1", w.lambda1}, {"lambda2", w.lambda2}};
}

inline LossWeights weights_from_json(const nlohmann::json& j) {
  LossWeights w{j.at("w1").get<double>(),      j.at("w2").get<double>(),
                j.at("alpha").get<double>(),   j.at("beta").get<double>(),
                j.at("lambda1").get<double>(), j.at("lambda2").get<double>()};
  validate(w);
  return w;
}

// JSON container; parameter arrays are row-major (group, horizon step,
// input step). Doubles are written in shortest round-trip form, so loading
// restores them bit-for-bit.
inline nlohmann::json checkpoint_to_json(const LinearForecaster& model,
                                         const std::optional<LossWeights>& weights = {}) {
  const auto& s = model.shape;
  nlohmann::json j = {
      {"format", kCheckpointFormat},
      {"version", kCheckpointVersion},
      {"input_length", s.input_length},
      {"horizon", s.horizon},
      {"channels", s.channels},
      {"share_channels", s.share_channels},
      {"kernel", s.kernel},
      {"seasonal_weight", model.params.seasonal_weight},
      {"seasonal_bias", model.params.seasonal_bias},
      {"trend_weight", model.params.trend_weight},
      {"trend_bias", model.params.trend_bias},
  };
  if (weights) j["loss_weights"] = weights_to_json(*weights);
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw InvalidData("checkpoint: unexpected format tag");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw InvalidData("checkpoint: unsupported version " + j.at("version").dump());
    }
    ModelShape s{j.at("input_length").get<std::size_t>(), j.at("horizon").get<std::size_t>(),
                 j.at("channels").get<std::size_t>(), j.at("share_channels").get<bool>(),
                 j.at("kernel").get<std::size_t>()};
    validate_kernel(s.kernel);
    Checkpoint cp{LinearForecaster{s, LinearParams::zeros(s)}, std::nullopt};
    const auto read = [&](const char* key, std::vector<double>& dst) {
      auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != dst.size()) {
        throw InvalidData(std::string("checkpoint: '") + key + "' has " +
                          std::to_string(v.size()) + " values, expected " +
                          std::to_string(dst.size()));
      }
      dst = std::move(v);
    };
    read("seasonal_weight", cp.model.params.seasonal_weight);
    read("seasonal_bias", cp.model.params.seasonal_bias);
    read("trend_weight", cp.model.params.trend_weight);
    read("trend_bias", cp.model.params.trend_bias);
    if (!cp.model.params.all_finite()) throw InvalidData("checkpoint: non-finite parameter");
    if (j.contains("loss_weights")) cp.weights = weights_from_json(j.at("loss_weights"));
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidData(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const LinearForecaster& model,
                            const std::optional<LossWeights>& weights = {}) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write '" + path + "'");
  out << checkpoint_to_json(model, weights).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidData("checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace hlf
