#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hlf/dataset.hpp"
#include "hlf/error.hpp"
#include "hlf/hybrid_loss.hpp"
#include "hlf/metrics.hpp"
#include "hlf/model.hpp"

namespace hlf {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::size_t max_steps = 0;  // 0 = no limit
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 0.0;  // global L2 norm; 0 disables clipping
  std::uint64_t seed = 0;
  LossVariant loss_variant = LossVariant::hybrid;
  double initial_w1 = 0.5;
  double initial_alpha = 0.5;
  double lambda1 = 0.9;
  double lambda2 = 0.1;
  UpdateOrder update_order = UpdateOrder::inner_first;

  LossPolicy policy() const {
    return make_variant(loss_variant,
                        VariantSettings{initial_w1, initial_alpha, lambda1, lambda2, update_order});
  }
};

inline void validate(const TrainConfig& c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
  if (c.batch_size < 1) throw ConfigError("batch_size must be positive");
  if (c.max_epochs < 1) throw ConfigError("max_epochs must be positive");
  if (!(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0) ||
      !(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(c.adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (!(c.grad_clip >= 0.0)) throw ConfigError("grad_clip must be non-negative");
  const auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(c.initial_w1) || !unit(c.initial_alpha)) {
    throw ConfigError("initial_w1 and initial_alpha must lie in [0, 1]");
  }
  if (!(c.lambda1 >= 0.0) || !(c.lambda2 >= 0.0)) {
    throw ConfigError("lambda1 and lambda2 must be non-negative");
  }
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  LinearParams first_moment;
  LinearParams second_moment;
  std::uint64_t step = 0;

  static AdamState for_shape(const ModelShape& s) {
    return {LinearParams::zeros(s), LinearParams::zeros(s), 0};
  }
};

// Bias-corrected Adam update of every parameter block.
inline void adam_step(LinearParams& params, const GradientSet& grads, AdamState& state,
                      const TrainConfig& cfg) {
  const auto same = [](const LinearParams& a, const LinearParams& b) {
    return a.seasonal_weight.size() == b.seasonal_weight.size() &&
           a.seasonal_bias.size() == b.seasonal_bias.size() &&
           a.trend_weight.size() == b.trend_weight.size() &&
           a.trend_bias.size() == b.trend_bias.size();
  };
  if (!same(params, grads) || !same(params, state.first_moment) ||
      !same(params, state.second_moment)) {
    throw InvalidArgument("adam_step: parameter/gradient/state shapes differ");
  }
  ++state.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  const auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                          std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  };
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  update(params.seasonal_weight, grads.seasonal_weight, m.seasonal_weight, v.seasonal_weight);
  update(params.seasonal_bias, grads.seasonal_bias, m.seasonal_bias, v.seasonal_bias);
  update(params.trend_weight, grads.trend_weight, m.trend_weight, v.trend_weight);
  update(params.trend_bias, grads.trend_bias, m.trend_bias, v.trend_bias);
}

inline void clip_global_norm(GradientSet& g, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  g.for_each([&](const std::vector<double>& v) {
    for (double x : v) sq += x * x;
  });
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  g.for_each([&](std::vector<double>& v) {
    for (double& x : v) x *= scale;
  });
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

inline constexpr std::size_t kEvalChunk = 256;

// Overall, seasonal, and trend MSE/MAE over every window of `windows`.
// Chunks are reduced in index order.
inline MetricsReport evaluate(const LinearForecaster& model, const WindowSet& windows,
                              std::size_t chunk = kEvalChunk) {
  if (windows.size() == 0) throw ConfigError("evaluate: no windows");
  MetricsAccumulator acc;
  for (std::size_t first = 0; first < windows.size(); first += chunk) {
    const auto count = std::min(chunk, windows.size() - first);
    const auto batch = windows.range(first, count);
    acc.add(forward(model, batch.inputs), batch);
  }
  return acc.report();
}

inline MetricsReport evaluate(const LinearForecaster& model, std::span<const WindowBatch> batches) {
  if (batches.empty()) throw ConfigError("evaluate: no batches");
  MetricsAccumulator acc;
  for (const auto& b : batches) acc.add(forward(model, b.inputs), b);
  return acc.report();
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;         // mean hybrid combined loss over the epoch's steps
  double train_overall_mse = 0.0;  // mean loss_G over the epoch's steps
  double val_overall_mse = 0.0;
};

struct TrainResult {
  LinearForecaster model;         // best-validation parameters
  LossWeights weights;            // loss weights at the best-validation epoch
  LossWeights final_weights;      // loss weights after the last executed step
  std::vector<StepRecord> trajectory;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
};

namespace detail {

// Fisher-Yates with a bounded draw written out by hand so the permutation
// depends only on the mt19937_64 stream, not on the standard library.
inline void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace detail

// Per step: forward, component losses, weight update (per the loss policy),
// hybrid loss, stream gradients, backward, Adam. Validation overall MSE is
// checked after every epoch; training stops after `patience` epochs without
// improvement and the best epoch's parameters are returned.
inline TrainResult train(LinearForecaster model, const WindowSet& train_set,
                         const WindowSet& val_set, const TrainConfig& cfg) {
  validate(cfg);
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw ConfigError("train: empty training or validation windows");
  }
  if (train_set.input_length() != model.shape.input_length ||
      train_set.horizon() != model.shape.horizon ||
      train_set.channels() != model.shape.channels) {
    throw ConfigError("train: window shape does not match model shape");
  }

  const LossPolicy policy = cfg.policy();
  TrainResult result;
  LossWeights weights = policy.initial;
  AdamState adam = AdamState::for_shape(model.shape);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  LinearParams best_params = model.params;
  LossWeights best_weights = weights;
  std::size_t stale = 0;
  bool out_of_steps = false;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs && !out_of_steps; ++epoch) {
    detail::shuffle_indices(order, rng);
    double loss_sum = 0.0, global_sum = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      if (cfg.max_steps != 0 && result.steps >= cfg.max_steps) {
        out_of_steps = true;
        break;
      }
      const auto count = std::min(cfg.batch_size, order.size() - first);
      const auto batch = train_set.batch(std::span(order).subspan(first, count));
      const auto out = forward(model, batch.inputs);
      const auto losses = component_losses(out, batch);
      const std::size_t step = result.steps + 1;
      if (!std::isfinite(losses.global) || !std::isfinite(losses.seasonal) ||
          !std::isfinite(losses.trend)) {
        throw TrainingError("non-finite loss at step " + std::to_string(step) + " (epoch " +
                            std::to_string(epoch) + ")");
      }
      weights = policy.step(weights, losses);
      const auto breakdown = hybrid_loss(weights, losses);
      const auto sg = loss_gradients(weights, out, batch);
      auto grads = backward(model, batch.inputs, sg.seasonal, sg.trend);
      clip_global_norm(grads, cfg.grad_clip);
      adam_step(model.params, grads, adam, cfg);
      if (!model.params.all_finite()) {
        throw TrainingError("non-finite parameters after step " + std::to_string(step));
      }
      result.trajectory.push_back({step, weights, breakdown});
      result.steps = step;
      loss_sum += breakdown.combined;
      global_sum += breakdown.loss_G;
      ++epoch_steps;
    }
    if (epoch_steps == 0) break;

    const double val = evaluate(model, val_set).overall_mse;
    const auto denom = static_cast<double>(epoch_steps);
    result.epochs.push_back({epoch, loss_sum / denom, global_sum / denom, val});
    if (val < result.best_val_mse) {
      result.best_val_mse = val;
      result.best_epoch = epoch;
      best_params = model.params;
      best_weights = weights;
      stale = 0;
    } else if (++stale >= std::max<std::size_t>(cfg.patience, 1)) {
      break;
    }
  }

  result.final_weights = weights;
  model.params = std::move(best_params);
  result.model = std::move(model);
  result.weights = best_weights;
  return result;
}

}  // namespace hlf
