#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hlf/error.hpp"
#include "hlf/tensor.hpp"

namespace hlf {

inline constexpr std::size_t kDefaultKernel = 25;

// T x C observations. Row t is time point t, column c is channel c.
struct TimeSeries {
  Matrix values;
  std::vector<std::string> channel_names;
  std::vector<std::string> timestamps;  // empty, or one per row

  std::size_t length() const noexcept { return values.rows(); }
  std::size_t channels() const noexcept { return values.cols(); }
};

inline std::vector<std::string> default_channel_names(std::size_t channels) {
  std::vector<std::string> names;
  names.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c) names.push_back("ch" + std::to_string(c));
  return names;
}

inline TimeSeries make_series(Matrix values, std::vector<std::string> names = {}) {
  if (names.empty()) names = default_channel_names(values.cols());
  return TimeSeries{std::move(values), std::move(names), {}};
}

// Throws if `series` breaks the TimeSeries invariants.
inline void validate(const TimeSeries& series) {
  if (series.length() < 1 || series.channels() < 1) {
    throw InvalidArgument("time series must have at least one row and one channel");
  }
  if (!series.channel_names.empty() && series.channel_names.size() != series.channels()) {
    throw InvalidArgument("channel_names has " + std::to_string(series.channel_names.size()) +
                          " entries for " + std::to_string(series.channels()) + " channels");
  }
  if (!series.timestamps.empty() && series.timestamps.size() != series.length()) {
    throw InvalidArgument("timestamps length does not match series length");
  }
  const auto& v = series.values;
  for (std::size_t t = 0; t < v.rows(); ++t) {
    for (std::size_t c = 0; c < v.cols(); ++c) {
      if (!std::isfinite(v(t, c))) {
        throw InvalidData("non-finite value at row " + std::to_string(t) + ", channel " +
                          std::to_string(c));
      }
    }
  }
}

struct DecompositionPair {
  Matrix seasonal;
  Matrix trend;
  std::size_t kernel = 1;
};

inline void validate_kernel(std::size_t kernel) {
  if (kernel == 0 || kernel % 2 == 0) {
    throw InvalidArgument("moving-average kernel must be odd and positive, got " +
                          std::to_string(kernel));
  }
}

namespace detail {

// Decomposes `rows` x `channels` row-major data in place into seasonal/trend
// buffers of the same layout. Trend is the centered mean over a window
// padded by replicating the first/last row (kernel - 1) / 2 times.
inline void decompose_rows(std::span<const double> x, std::size_t rows, std::size_t channels,
                           std::size_t kernel, std::span<double> seasonal,
                           std::span<double> trend) {
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  const auto last = static_cast<std::ptrdiff_t>(rows) - 1;
  const auto width = static_cast<double>(kernel);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::ptrdiff_t t = 0; t <= last; ++t) {
      double sum = 0.0;
      for (std::ptrdiff_t j = t - half; j <= t + half; ++j) {
        const std::ptrdiff_t k = j < 0 ? 0 : (j > last ? last : j);
        sum += x[static_cast<std::size_t>(k) * channels + c];
      }
      const std::size_t idx = static_cast<std::size_t>(t) * channels + c;
      trend[idx] = sum / width;
      seasonal[idx] = x[idx] - trend[idx];
    }
  }
}

}  // namespace detail

// Sliding-window moving-average decomposition; each channel independently.
inline DecompositionPair moving_average_decompose(const TimeSeries& series,
                                                  std::size_t kernel = kDefaultKernel) {
  validate_kernel(kernel);
  validate(series);
  const auto rows = series.length();
  const auto cols = series.channels();
  DecompositionPair out{Matrix(rows, cols), Matrix(rows, cols), kernel};
  detail::decompose_rows(series.values.data(), rows, cols, kernel, out.seasonal.data(),
                         out.trend.data());
  return out;
}

inline TimeSeries reconstruct(const DecompositionPair& pair) {
  if (!pair.seasonal.same_shape(pair.trend)) {
    throw InvalidArgument("reconstruct: seasonal and trend shapes differ");
  }
  Matrix sum(pair.seasonal.rows(), pair.seasonal.cols());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum.data()[i] = pair.seasonal.data()[i] + pair.trend.data()[i];
  }
  return make_series(std::move(sum));
}

}  // namespace hlf
