#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "hlf/error.hpp"
#include "hlf/series.hpp"

namespace hlf {

struct SeasonalTerm {
  double amplitude = 1.0;
  double period = 24.0;
  double phase = 0.0;
};

enum class TrendKind { none, linear, piecewise };

struct TrendSpec {
  TrendKind kind = TrendKind::none;
  double slope = 0.0;                // linear
  std::vector<std::size_t> breaks;   // piecewise: strictly increasing change points
  std::vector<double> slopes;        // piecewise: breaks.size() + 1 slopes
};

struct SynthSpec {
  std::size_t length = 1000;
  std::size_t channels = 1;
  TrendSpec trend;
  std::vector<SeasonalTerm> seasonal;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

inline void validate(const SynthSpec& s) {
  if (s.length < 1) throw InvalidArgument("synth: length must be at least 1");
  if (s.channels < 1) throw InvalidArgument("synth: channels must be at least 1");
  if (!(s.noise_std >= 0.0) || !std::isfinite(s.noise_std)) {
    throw InvalidArgument("synth: noise_std must be finite and non-negative");
  }
  for (const auto& term : s.seasonal) {
    if (!(term.period >= 2.0)) throw InvalidArgument("synth: seasonal period must be >= 2");
    if (!std::isfinite(term.amplitude) || !std::isfinite(term.phase)) {
      throw InvalidArgument("synth: seasonal amplitude/phase must be finite");
    }
  }
  if (s.trend.kind == TrendKind::piecewise) {
    if (s.trend.slopes.size() != s.trend.breaks.size() + 1) {
      throw InvalidArgument("synth: piecewise trend needs breaks.size() + 1 slopes");
    }
    for (std::size_t k = 1; k < s.trend.breaks.size(); ++k) {
      if (s.trend.breaks[k] <= s.trend.breaks[k - 1]) {
        throw InvalidArgument("synth: piecewise breaks must be strictly increasing");
      }
    }
  }
}

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based standard normal draw for (seed, channel, t): two SplitMix64
// hashes of the counter give uniforms u1 in (0, 1] and u2 in [0, 1), and the
// cosine branch of Box-Muller maps them to N(0, 1). Any implementation of
// these two published algorithms reproduces the same stream.
inline double counter_gaussian(std::uint64_t seed, std::uint64_t channel, std::uint64_t t) {
  const std::uint64_t key = splitmix64(seed ^ splitmix64(channel + 1));
  const std::uint64_t a = splitmix64(key + 2 * t);
  const std::uint64_t b = splitmix64(key + 2 * t + 1);
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double trend_value(const TrendSpec& trend, std::size_t t) {
  switch (trend.kind) {
    case TrendKind::none: return 0.0;
    case TrendKind::linear: return trend.slope * static_cast<double>(t);
    case TrendKind::piecewise: {
      // Continuous, starting from 0 at t = 0.
      double value = 0.0;
      std::size_t from = 0, seg = 0;
      for (; seg < trend.breaks.size() && trend.breaks[seg] < t; ++seg) {
        value += trend.slopes[seg] * static_cast<double>(trend.breaks[seg] - from);
        from = trend.breaks[seg];
      }
      return value + trend.slopes[seg] * static_cast<double>(t - from);
    }
  }
  return 0.0;
}

// "YYYY-MM-DD HH:MM:SS" stamps at hourly spacing from 2016-07-01 00:00:00.
inline std::vector<std::string> hourly_timestamps(std::size_t count) {
  using namespace std::chrono;
  std::vector<std::string> out;
  out.reserve(count);
  const sys_days origin{year{2016} / 7 / 1};
  char buf[32];
  for (std::size_t i = 0; i < count; ++i) {
    const auto day = origin + days{static_cast<int>(i / 24)};
    const year_month_day ymd{day};
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02zu:00:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), i % 24);
    out.emplace_back(buf);
  }
  return out;
}

// value[t, c] = trend(t) + sum_k amplitude_k * sin(2 pi t / period_k + phase_k)
//             + noise_std * N(0, 1)
inline TimeSeries generate(const SynthSpec& spec) {
  validate(spec);
  Matrix values(spec.length, spec.channels);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    for (std::size_t t = 0; t < spec.length; ++t) {
      double v = trend_value(spec.trend, t);
      for (const auto& term : spec.seasonal) {
        v += term.amplitude *
             std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / term.period + term.phase);
      }
      if (spec.noise_std > 0.0) v += spec.noise_std * counter_gaussian(spec.seed, c, t);
      values(t, c) = v;
    }
  }
  TimeSeries series = make_series(std::move(values));
  series.timestamps = hourly_timestamps(spec.length);
  return series;
}

}  // namespace hlf
