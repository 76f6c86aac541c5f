#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>

#include "hlf/dataset.hpp"
#include "hlf/error.hpp"
#include "hlf/model.hpp"
#include "hlf/tensor.hpp"

namespace hlf {

// Simplex weights of the dual min-max objective
//   min_theta max_{w, alpha} w1 * L_G + w2 * (alpha * L_S + beta * L_T)
// with the temperatures of their exponentiated updates.
struct LossWeights {
  double w1 = 0.5;
  double w2 = 0.5;
  double alpha = 0.5;
  double beta = 0.5;
  double lambda1 = 0.9;
  double lambda2 = 0.1;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

inline constexpr double kSimplexTolerance = 1e-12;

inline void validate(const LossWeights& w) {
  const auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(w.w1) || !in_unit(w.w2) || !in_unit(w.alpha) || !in_unit(w.beta)) {
    throw InvalidArgument("loss weights must lie in [0, 1]");
  }
  if (std::abs(w.w1 + w.w2 - 1.0) > kSimplexTolerance ||
      std::abs(w.alpha + w.beta - 1.0) > kSimplexTolerance) {
    throw InvalidArgument("loss weights must satisfy w1 + w2 = 1 and alpha + beta = 1");
  }
  if (!(w.lambda1 >= 0.0) || !(w.lambda2 >= 0.0) || !std::isfinite(w.lambda1) ||
      !std::isfinite(w.lambda2)) {
    throw InvalidArgument("temperatures must be finite and non-negative");
  }
}

inline LossWeights make_weights(double w1, double alpha, double lambda1 = 0.9,
                                double lambda2 = 0.1) {
  LossWeights w{w1, 1.0 - w1, alpha, 1.0 - alpha, lambda1, lambda2};
  validate(w);
  return w;
}

// MSE of the combined forecast, the seasonal stream, and the trend stream.
struct ComponentLosses {
  double global = 0.0;
  double seasonal = 0.0;
  double trend = 0.0;
};

struct LossBreakdown {
  double loss_G = 0.0;
  double loss_S = 0.0;
  double loss_T = 0.0;
  double loss_C = 0.0;
  double combined = 0.0;
};

namespace detail {

inline double mean_squared_residual(const Tensor3& pred, const Tensor3& target) {
  double sum = 0.0;
  const auto& p = pred.data();
  const auto& t = target.data();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = p[k] - t[k];
    sum += d * d;
  }
  return sum / static_cast<double>(p.size());
}

inline void check_output_batch(const ForecastOutput& out, const WindowBatch& batch) {
  require_same_shape(out.combined(), batch.targets, "loss");
  require_same_shape(out.seasonal_pred(), batch.targets_seasonal, "loss");
  require_same_shape(out.trend_pred(), batch.targets_trend, "loss");
  if (out.combined().size() == 0) throw InvalidArgument("loss: empty batch");
}

inline void check_loss(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    throw InvalidArgument(std::string("loss ") + name + " must be finite and non-negative");
  }
}

}  // namespace detail

inline ComponentLosses component_losses(const ForecastOutput& out, const WindowBatch& batch) {
  detail::check_output_batch(out, batch);
  return {detail::mean_squared_residual(out.combined(), batch.targets),
          detail::mean_squared_residual(out.seasonal_pred(), batch.targets_seasonal),
          detail::mean_squared_residual(out.trend_pred(), batch.targets_trend)};
}

// One exponentiated (mirror-descent) step on a two-point simplex:
//   p' = p exp(lambda Lp) / (p exp(lambda Lp) + q exp(lambda Lq)).
// Evaluated in log space, shifted by the larger log-weight, so large losses
// cannot overflow and a zero weight cannot produce 0/0.
inline std::pair<double, double> exponentiated_pair_update(double p, double q, double loss_p,
                                                           double loss_q, double lambda) {
  const double lp = std::log(p) + lambda * loss_p;
  const double lq = std::log(q) + lambda * loss_q;
  const double shift = std::max(lp, lq);
  const double ep = std::exp(lp - shift);
  const double eq = std::exp(lq - shift);
  const double z = ep + eq;
  return {ep / z, eq / z};
}

enum class UpdateOrder {
  inner_first,      // update (alpha, beta), then form L_C with the new values
  previous_inner,   // form L_C with the previous (alpha, beta)
};

inline UpdateOrder parse_update_order(std::string_view s) {
  if (s == "inner_first") return UpdateOrder::inner_first;
  if (s == "previous_inner") return UpdateOrder::previous_inner;
  throw ConfigError("unknown update_order '" + std::string(s) + "'");
}

inline const char* to_string(UpdateOrder o) {
  return o == UpdateOrder::inner_first ? "inner_first" : "previous_inner";
}

inline LossWeights update_weights(const LossWeights& pre, double loss_G, double loss_S,
                                  double loss_T, UpdateOrder order = UpdateOrder::inner_first) {
  validate(pre);
  detail::check_loss(loss_G, "G");
  detail::check_loss(loss_S, "S");
  detail::check_loss(loss_T, "T");
  LossWeights cur = pre;
  std::tie(cur.alpha, cur.beta) =
      exponentiated_pair_update(pre.alpha, pre.beta, loss_S, loss_T, pre.lambda2);
  const LossWeights& inner = order == UpdateOrder::inner_first ? cur : pre;
  const double loss_C = inner.alpha * loss_S + inner.beta * loss_T;
  std::tie(cur.w1, cur.w2) =
      exponentiated_pair_update(pre.w1, pre.w2, loss_G, loss_C, pre.lambda1);
  return cur;
}

inline LossWeights update_weights(const LossWeights& pre, const ComponentLosses& l,
                                  UpdateOrder order = UpdateOrder::inner_first) {
  return update_weights(pre, l.global, l.seasonal, l.trend, order);
}

inline LossBreakdown hybrid_loss(const LossWeights& w, double loss_G, double loss_S,
                                 double loss_T) {
  validate(w);
  LossBreakdown b{loss_G, loss_S, loss_T, 0.0, 0.0};
  b.loss_C = w.alpha * loss_S + w.beta * loss_T;
  b.combined = w.w1 * loss_G + w.w2 * b.loss_C;
  return b;
}

inline LossBreakdown hybrid_loss(const LossWeights& w, const ComponentLosses& l) {
  return hybrid_loss(w, l.global, l.seasonal, l.trend);
}

struct StreamGradients {
  Tensor3 seasonal;
  Tensor3 trend;
};

// Gradient of the hybrid loss with respect to both prediction streams, with
// the weights held constant. The combined-forecast term reaches both streams
// unchanged because combined = seasonal + trend.
inline StreamGradients loss_gradients(const LossWeights& w, const ForecastOutput& out,
                                      const WindowBatch& batch) {
  detail::check_output_batch(out, batch);
  const auto& comb = out.combined().data();
  const auto& sp = out.seasonal_pred().data();
  const auto& tp = out.trend_pred().data();
  const auto& y = batch.targets.data();
  const auto& ys = batch.targets_seasonal.data();
  const auto& yt = batch.targets_trend.data();
  const double scale = 2.0 / static_cast<double>(comb.size());
  const double cs = w.w2 * w.alpha;
  const double ct = w.w2 * w.beta;
  const auto& ref = out.combined();
  StreamGradients g{Tensor3(ref.n(), ref.steps(), ref.channels()),
                    Tensor3(ref.n(), ref.steps(), ref.channels())};
  for (std::size_t k = 0; k < comb.size(); ++k) {
    const double global = w.w1 * (comb[k] - y[k]);
    g.seasonal.data()[k] = scale * (global + cs * (sp[k] - ys[k]));
    g.trend.data()[k] = scale * (global + ct * (tp[k] - yt[k]));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Loss policies (the ablation variants)
// ---------------------------------------------------------------------------

enum class LossVariant {
  hybrid,          // both weight pairs updated every step
  component_only,  // alpha * L_S + beta * L_T, only (alpha, beta) updated
  fixed_weight,    // all four weights pinned at 0.5
  original,        // plain overall MSE: w1 pinned at 1
};

inline LossVariant parse_loss_variant(std::string_view s) {
  if (s == "hybrid") return LossVariant::hybrid;
  if (s == "component_only") return LossVariant::component_only;
  if (s == "fixed_weight") return LossVariant::fixed_weight;
  if (s == "original") return LossVariant::original;
  throw ConfigError("unknown loss variant '" + std::string(s) + "'");
}

inline const char* to_string(LossVariant v) {
  switch (v) {
    case LossVariant::hybrid: return "hybrid";
    case LossVariant::component_only: return "component_only";
    case LossVariant::fixed_weight: return "fixed_weight";
    case LossVariant::original: return "original";
  }
  return "?";
}

struct LossPolicy {
  LossVariant variant = LossVariant::hybrid;
  LossWeights initial;
  bool update_outer = true;
  bool update_inner = true;
  UpdateOrder order = UpdateOrder::inner_first;

  LossWeights step(const LossWeights& pre, const ComponentLosses& l) const {
    if (update_outer && update_inner) return update_weights(pre, l, order);
    LossWeights cur = pre;
    if (update_inner) {
      detail::check_loss(l.seasonal, "S");
      detail::check_loss(l.trend, "T");
      std::tie(cur.alpha, cur.beta) =
          exponentiated_pair_update(pre.alpha, pre.beta, l.seasonal, l.trend, pre.lambda2);
    }
    if (update_outer) {
      const LossWeights& inner = order == UpdateOrder::inner_first ? cur : pre;
      const double loss_C = inner.alpha * l.seasonal + inner.beta * l.trend;
      detail::check_loss(l.global, "G");
      std::tie(cur.w1, cur.w2) =
          exponentiated_pair_update(pre.w1, pre.w2, l.global, loss_C, pre.lambda1);
    }
    return cur;
  }
};

struct VariantSettings {
  double initial_w1 = 0.5;
  double initial_alpha = 0.5;
  double lambda1 = 0.9;
  double lambda2 = 0.1;
  UpdateOrder order = UpdateOrder::inner_first;
};

inline LossPolicy make_variant(LossVariant kind, const VariantSettings& s = {}) {
  LossPolicy p;
  p.variant = kind;
  p.order = s.order;
  switch (kind) {
    case LossVariant::hybrid:
      p.initial = make_weights(s.initial_w1, s.initial_alpha, s.lambda1, s.lambda2);
      break;
    case LossVariant::component_only:
      p.initial = make_weights(0.0, s.initial_alpha, s.lambda1, s.lambda2);
      p.update_outer = false;
      break;
    case LossVariant::fixed_weight:
      p.initial = make_weights(0.5, 0.5, s.lambda1, s.lambda2);
      p.update_outer = p.update_inner = false;
      break;
    case LossVariant::original:
      p.initial = make_weights(1.0, 0.5, s.lambda1, s.lambda2);
      p.update_outer = p.update_inner = false;
      break;
  }
  return p;
}

inline LossPolicy make_variant(std::string_view kind, const VariantSettings& s = {}) {
  return make_variant(parse_loss_variant(kind), s);
}

// ---------------------------------------------------------------------------
// Weight trajectory log
// ---------------------------------------------------------------------------

struct StepRecord {
  std::size_t step = 0;
  LossWeights weights;
  LossBreakdown loss;
};

inline void write_trajectory_csv(std::ostream& out, std::span<const StepRecord> records) {
  out << "step,w1,w2,alpha,beta,loss_G,loss_S,loss_T,combined\n";
  const auto old = out.precision(17);
  for (const auto& r : records) {
    out << r.step << ',' << r.weights.w1 << ',' << r.weights.w2 << ',' << r.weights.alpha << ','
        << r.weights.beta << ',' << r.loss.loss_G << ',' << r.loss.loss_S << ','
        << r.loss.loss_T << ',' << r.loss.combined << '\n';
  }
  out.precision(old);
}

}  // namespace hlf
