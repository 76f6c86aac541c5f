#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hlf/dataset.hpp"
#include "hlf/error.hpp"
#include "hlf/model.hpp"

namespace hlf {

namespace detail {

inline void check_metric_args(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw InvalidArgument("metric: shape mismatch");
  if (pred.empty()) throw InvalidArgument("metric: empty input");
}

}  // namespace detail

// Mean of squared residuals over every element (no square root).
inline double mse(std::span<const double> pred, std::span<const double> target) {
  detail::check_metric_args(pred, target);
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred[k] - target[k];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

// Mean of absolute residuals over every element.
inline double mae(std::span<const double> pred, std::span<const double> target) {
  detail::check_metric_args(pred, target);
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) sum += std::abs(pred[k] - target[k]);
  return sum / static_cast<double>(pred.size());
}

inline double mse(const Tensor3& pred, const Tensor3& target) {
  require_same_shape(pred, target, "mse");
  return mse(pred.data(), target.data());
}

inline double mae(const Tensor3& pred, const Tensor3& target) {
  require_same_shape(pred, target, "mae");
  return mae(pred.data(), target.data());
}

struct MetricsReport {
  double overall_mse = 0.0;
  double overall_mae = 0.0;
  double seasonal_mse = 0.0;
  double seasonal_mae = 0.0;
  double trend_mse = 0.0;
  double trend_mae = 0.0;
  std::size_t horizon = 0;
  std::size_t n_windows = 0;
};

// Streaming sums behind a MetricsReport. Batches are folded in the order
// they are added, so results are reproducible bit-for-bit.
class MetricsAccumulator {
public:
  void add(const ForecastOutput& out, const WindowBatch& batch) {
    require_same_shape(out.combined(), batch.targets, "metrics");
    require_same_shape(out.seasonal_pred(), batch.targets_seasonal, "metrics");
    require_same_shape(out.trend_pred(), batch.targets_trend, "metrics");
    if (horizon_ != 0 && horizon_ != batch.targets.steps()) {
      throw InvalidArgument("metrics: batches with different horizons");
    }
    horizon_ = batch.targets.steps();
    accumulate(out.combined().data(), batch.targets.data(), sq_[0], abs_[0]);
    accumulate(out.seasonal_pred().data(), batch.targets_seasonal.data(), sq_[1], abs_[1]);
    accumulate(out.trend_pred().data(), batch.targets_trend.data(), sq_[2], abs_[2]);
    elements_ += batch.targets.size();
    windows_ += batch.size();
  }

  std::size_t windows() const noexcept { return windows_; }

  MetricsReport report() const {
    if (elements_ == 0) throw ConfigError("metrics: no windows evaluated");
    const auto n = static_cast<double>(elements_);
    return {sq_[0] / n, abs_[0] / n, sq_[1] / n, abs_[1] / n, sq_[2] / n, abs_[2] / n,
            horizon_, windows_};
  }

private:
  static void accumulate(std::span<const double> p, std::span<const double> t, double& sq,
                         double& ab) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double d = p[k] - t[k];
      sq += d * d;
      ab += std::abs(d);
    }
  }

  double sq_[3] = {0.0, 0.0, 0.0};
  double abs_[3] = {0.0, 0.0, 0.0};
  std::size_t elements_ = 0;
  std::size_t windows_ = 0;
  std::size_t horizon_ = 0;
};

inline MetricsReport report(const ForecastOutput& out, const WindowBatch& batch) {
  MetricsAccumulator acc;
  acc.add(out, batch);
  return acc.report();
}

// Unweighted mean across reports, e.g. across forecast horizons.
inline MetricsReport mean_report(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw InvalidArgument("mean_report: no reports");
  MetricsReport m{};
  for (const auto& r : reports) {
    m.overall_mse += r.overall_mse;
    m.overall_mae += r.overall_mae;
    m.seasonal_mse += r.seasonal_mse;
    m.seasonal_mae += r.seasonal_mae;
    m.trend_mse += r.trend_mse;
    m.trend_mae += r.trend_mae;
    m.n_windows += r.n_windows;
  }
  const auto k = static_cast<double>(reports.size());
  m.overall_mse /= k;
  m.overall_mae /= k;
  m.seasonal_mse /= k;
  m.seasonal_mae /= k;
  m.trend_mse /= k;
  m.trend_mae /= k;
  m.horizon = 0;  // mixed
  return m;
}

}  // namespace hlf
