#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hlf/error.hpp"
#include "hlf/series.hpp"
#include "hlf/tensor.hpp"

namespace hlf {

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

struct CsvOptions {
  // Name of the timestamp column. When unset, a leading column whose header
  // is "date" (any case) is treated as the timestamp column.
  std::optional<std::string> date_column;
  bool reject_constant_channels = true;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Splits one CSV record. Double-quoted fields may contain commas; quotes are
// stripped. Embedded newlines are not supported.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

}  // namespace detail

// Rejects channels whose values are all equal over rows [begin, end).
inline void require_nonconstant_channels(const TimeSeries& series, std::size_t begin,
                                         std::size_t end) {
  for (std::size_t c = 0; c < series.channels(); ++c) {
    const double first = series.values(begin, c);
    bool constant = true;
    for (std::size_t t = begin + 1; t < end && constant; ++t) {
      constant = series.values(t, c) == first;
    }
    if (constant) {
      const auto& name =
          c < series.channel_names.size() ? series.channel_names[c] : std::to_string(c);
      throw InvalidData("channel '" + name + "' has zero variance");
    }
  }
}

inline TimeSeries parse_csv(std::istream& in, const CsvOptions& options = {}) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidData("csv: missing header row");
  const auto header = detail::split_csv_line(line);

  std::optional<std::size_t> date_idx;
  if (options.date_column) {
    auto it = std::find(header.begin(), header.end(), *options.date_column);
    if (it == header.end()) {
      throw InvalidData("csv: date column '" + *options.date_column + "' not in header");
    }
    date_idx = static_cast<std::size_t>(it - header.begin());
  } else if (!header.empty() && detail::lower(header.front()) == "date") {
    date_idx = 0;
  }

  TimeSeries series;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != date_idx) series.channel_names.push_back(header[j]);
  }
  const std::size_t channels = series.channel_names.size();
  if (channels == 0) throw InvalidData("csv: no value columns");

  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InvalidData("csv: row " + std::to_string(row) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == date_idx) {
        series.timestamps.push_back(cells[j]);
        continue;
      }
      auto v = detail::parse_double(cells[j]);
      if (!v) {
        throw InvalidData("csv: cannot parse '" + cells[j] + "' at row " + std::to_string(row) +
                          ", column '" + header[j] + "'");
      }
      values.push_back(*v);
    }
  }
  if (row < 2) throw InvalidData("csv: need at least 2 data rows, found " + std::to_string(row));

  series.values = Matrix(row, channels, std::move(values));
  if (options.reject_constant_channels) require_nonconstant_channels(series, 0, row);
  return series;
}

inline TimeSeries load_csv(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path + "'");
  return parse_csv(in, options);
}

// Writes `series` in the format load_csv reads. Doubles are printed with
// round-trip precision.
inline void write_csv(std::ostream& out, const TimeSeries& series) {
  const bool dated = !series.timestamps.empty();
  const auto names = series.channel_names.empty() ? default_channel_names(series.channels())
                                                  : series.channel_names;
  if (dated) out << "date";
  for (std::size_t c = 0; c < names.size(); ++c) out << (c || dated ? "," : "") << names[c];
  out << '\n';
  out.precision(17);
  for (std::size_t t = 0; t < series.length(); ++t) {
    if (dated) out << series.timestamps[t];
    for (std::size_t c = 0; c < series.channels(); ++c) {
      out << (c || dated ? "," : "") << series.values(t, c);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

enum class SplitMode { ett_hourly, ett_minute, ratio };

inline SplitMode parse_split_mode(std::string_view s) {
  if (s == "ett_hourly") return SplitMode::ett_hourly;
  if (s == "ett_minute") return SplitMode::ett_minute;
  if (s == "ratio") return SplitMode::ratio;
  throw ConfigError("unknown split mode '" + std::string(s) + "'");
}

inline const char* to_string(SplitMode m) {
  switch (m) {
    case SplitMode::ett_hourly: return "ett_hourly";
    case SplitMode::ett_minute: return "ett_minute";
    case SplitMode::ratio: return "ratio";
  }
  return "?";
}

struct SplitSpec {
  SplitMode mode = SplitMode::ratio;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::size_t input_length = 96;
  std::size_t horizon = 96;
};

inline void validate(const SplitSpec& spec) {
  if (spec.input_length < 1 || spec.horizon < 1) {
    throw ConfigError("input_length and horizon must be positive");
  }
  if (spec.mode == SplitMode::ratio) {
    for (double r : spec.ratios) {
      if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
    }
    const double sum = spec.ratios[0] + spec.ratios[1] + spec.ratios[2];
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("split ratios must sum to 1");
  }
}

// Half-open row range [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

struct SplitRanges {
  RowRange train, val, test;
};

inline std::size_t window_count(std::size_t segment_length, std::size_t input_length,
                                std::size_t horizon) {
  const auto need = input_length + horizon;
  return segment_length < need ? 0 : segment_length - need + 1;
}

// Train/validation/test row ranges. Validation and test start `input_length`
// rows early so their first window has a full input history.
inline SplitRanges split(std::size_t series_length, const SplitSpec& spec) {
  validate(spec);
  const std::size_t lookback = spec.input_length;
  std::size_t train_end = 0, val_end = 0, test_end = 0;
  switch (spec.mode) {
    case SplitMode::ett_hourly:
    case SplitMode::ett_minute: {
      // 12 / 4 / 4 months of 30 days.
      const std::size_t per_hour = spec.mode == SplitMode::ett_minute ? 4 : 1;
      const std::size_t month = 30 * 24 * per_hour;
      train_end = 12 * month;
      val_end = train_end + 4 * month;
      test_end = val_end + 4 * month;
      if (series_length < test_end) {
        throw ConfigError("series has " + std::to_string(series_length) + " rows; " +
                          to_string(spec.mode) + " split needs " + std::to_string(test_end));
      }
      break;
    }
    case SplitMode::ratio: {
      const auto n = static_cast<double>(series_length);
      train_end = static_cast<std::size_t>(std::floor(spec.ratios[0] * n));
      const auto n_test = static_cast<std::size_t>(std::floor(spec.ratios[2] * n));
      test_end = series_length;
      val_end = series_length - n_test;
      break;
    }
  }
  if (train_end < lookback) throw ConfigError("training segment shorter than input_length");
  SplitRanges r{{0, train_end}, {train_end - lookback, val_end}, {val_end - lookback, test_end}};
  const auto check = [&](const RowRange& seg, const char* name) {
    if (window_count(seg.size(), spec.input_length, spec.horizon) == 0) {
      throw ConfigError(std::string(name) + " segment (" + std::to_string(seg.size()) +
                        " rows) too short for input_length " + std::to_string(spec.input_length) +
                        " + horizon " + std::to_string(spec.horizon));
    }
  };
  check(r.train, "train");
  check(r.val, "validation");
  check(r.test, "test");
  return r;
}

inline SplitRanges split(const TimeSeries& series, const SplitSpec& spec) {
  return split(series.length(), spec);
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> std_dev;  // population standard deviation
};

inline StandardizationStats fit_standardizer(const TimeSeries& series, RowRange train) {
  if (train.size() == 0 || train.end > series.length()) {
    throw InvalidArgument("fit_standardizer: empty or out-of-range training rows");
  }
  const auto channels = series.channels();
  StandardizationStats stats{std::vector<double>(channels, 0.0),
                             std::vector<double>(channels, 0.0)};
  const auto n = static_cast<double>(train.size());
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t t = train.begin; t < train.end; ++t) sum += series.values(t, c);
    const double mean = sum / n;
    double sq = 0.0;
    for (std::size_t t = train.begin; t < train.end; ++t) {
      const double d = series.values(t, c) - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / n);
    if (!(sd > 0.0)) {
      const auto& name =
          c < series.channel_names.size() ? series.channel_names[c] : std::to_string(c);
      throw InvalidData("channel '" + name + "' has zero variance over the training rows");
    }
    stats.mean[c] = mean;
    stats.std_dev[c] = sd;
  }
  return stats;
}

inline TimeSeries standardize(const TimeSeries& series, const StandardizationStats& stats) {
  if (stats.mean.size() != series.channels() || stats.std_dev.size() != series.channels()) {
    throw InvalidArgument("standardize: stats/channel count mismatch");
  }
  TimeSeries out = series;
  for (std::size_t t = 0; t < out.length(); ++t) {
    for (std::size_t c = 0; c < out.channels(); ++c) {
      out.values(t, c) = (out.values(t, c) - stats.mean[c]) / stats.std_dev[c];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

// How ground-truth seasonal/trend targets are produced.
enum class TargetDecomposition {
  per_window,   // each H-row target window decomposed on its own
  full_series,  // the whole segment decomposed once, then sliced
};

inline TargetDecomposition parse_target_decomposition(std::string_view s) {
  if (s == "per_window") return TargetDecomposition::per_window;
  if (s == "full_series") return TargetDecomposition::full_series;
  throw ConfigError("unknown target_decomposition '" + std::string(s) + "'");
}

inline const char* to_string(TargetDecomposition m) {
  return m == TargetDecomposition::per_window ? "per_window" : "full_series";
}

struct WindowBatch {
  Tensor3 inputs;            // N x L x C
  Tensor3 targets;           // N x H x C
  Tensor3 targets_seasonal;  // N x H x C
  Tensor3 targets_trend;     // N x H x C

  std::size_t size() const noexcept { return inputs.n(); }
};

// Stride-1 windows over one contiguous segment. Batches are materialized on
// demand so long horizons over large segments do not need every window in
// memory at once.
class WindowSet {
public:
  WindowSet(const TimeSeries& series, RowRange segment, std::size_t input_length,
            std::size_t horizon, std::size_t kernel = kDefaultKernel,
            TargetDecomposition mode = TargetDecomposition::per_window)
      : input_length_(input_length), horizon_(horizon), kernel_(kernel), mode_(mode) {
    validate_kernel(kernel);
    if (input_length < 1 || horizon < 1) {
      throw ConfigError("input_length and horizon must be positive");
    }
    if (segment.end > series.length() || segment.begin > segment.end) {
      throw InvalidArgument("WindowSet: segment outside series");
    }
    count_ = window_count(segment.size(), input_length, horizon);
    if (count_ == 0) {
      throw ConfigError("segment of " + std::to_string(segment.size()) +
                        " rows is shorter than input_length + horizon = " +
                        std::to_string(input_length + horizon));
    }
    const auto channels = series.channels();
    segment_ = Matrix(segment.size(), channels);
    for (std::size_t t = 0; t < segment.size(); ++t) {
      auto src = series.values.row(segment.begin + t);
      std::copy(src.begin(), src.end(), segment_.row(t).begin());
    }
    if (mode_ == TargetDecomposition::full_series) {
      full_seasonal_ = Matrix(segment_.rows(), channels);
      full_trend_ = Matrix(segment_.rows(), channels);
      detail::decompose_rows(segment_.data(), segment_.rows(), channels, kernel_,
                             full_seasonal_.data(), full_trend_.data());
    }
  }

  std::size_t size() const noexcept { return count_; }
  std::size_t input_length() const noexcept { return input_length_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t channels() const noexcept { return segment_.cols(); }
  std::size_t kernel() const noexcept { return kernel_; }

  WindowBatch batch(std::span<const std::size_t> indices) const {
    const auto n = indices.size();
    const auto channels = segment_.cols();
    WindowBatch b{Tensor3(n, input_length_, channels), Tensor3(n, horizon_, channels),
                  Tensor3(n, horizon_, channels), Tensor3(n, horizon_, channels)};
    const auto in_span = input_length_ * channels;
    const auto out_span = horizon_ * channels;
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = indices[k];
      if (i >= count_) throw InvalidArgument("window index out of range");
      const double* base = segment_.data().data() + i * channels;
      std::copy_n(base, in_span, b.inputs.window(k).begin());
      std::copy_n(base + in_span, out_span, b.targets.window(k).begin());
      if (mode_ == TargetDecomposition::per_window) {
        detail::decompose_rows(b.targets.window(k), horizon_, channels, kernel_,
                               b.targets_seasonal.window(k), b.targets_trend.window(k));
      } else {
        const auto offset = (i + input_length_) * channels;
        std::copy_n(full_seasonal_.data().data() + offset, out_span,
                    b.targets_seasonal.window(k).begin());
        std::copy_n(full_trend_.data().data() + offset, out_span,
                    b.targets_trend.window(k).begin());
      }
    }
    return b;
  }

  // Windows [first, first + count) in order.
  WindowBatch range(std::size_t first, std::size_t count) const {
    std::vector<std::size_t> idx(count);
    for (std::size_t k = 0; k < count; ++k) idx[k] = first + k;
    return batch(idx);
  }

  WindowBatch all() const { return range(0, count_); }

private:
  std::size_t input_length_;
  std::size_t horizon_;
  std::size_t kernel_;
  TargetDecomposition mode_;
  std::size_t count_ = 0;
  Matrix segment_;
  Matrix full_seasonal_;
  Matrix full_trend_;
};

inline WindowBatch make_windows(const TimeSeries& series, RowRange segment,
                                std::size_t input_length, std::size_t horizon,
                                std::size_t kernel = kDefaultKernel,
                                TargetDecomposition mode = TargetDecomposition::per_window) {
  return WindowSet(series, segment, input_length, horizon, kernel, mode).all();
}

}  // namespace hlf
