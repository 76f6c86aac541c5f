#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hlf/error.hpp"
#include "hlf/series.hpp"
#include "hlf/tensor.hpp"

namespace hlf {

struct ModelShape {
  std::size_t input_length = 96;
  std::size_t horizon = 96;
  std::size_t channels = 1;
  bool share_channels = true;
  std::size_t kernel = kDefaultKernel;

  // Number of independent parameter sets.
  std::size_t groups() const noexcept { return share_channels ? 1 : channels; }

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// The four parameter blocks of the decomposition-linear forecaster, each
// stored group-major: weight[g][h][l], bias[g][h]. Also used as the gradient
// carrier, since gradients mirror the parameters exactly.
struct LinearParams {
  std::vector<double> seasonal_weight;
  std::vector<double> seasonal_bias;
  std::vector<double> trend_weight;
  std::vector<double> trend_bias;

  static LinearParams zeros(const ModelShape& s) {
    const auto g = s.groups();
    return {std::vector<double>(g * s.horizon * s.input_length, 0.0),
            std::vector<double>(g * s.horizon, 0.0),
            std::vector<double>(g * s.horizon * s.input_length, 0.0),
            std::vector<double>(g * s.horizon, 0.0)};
  }

  template <class F>
  void for_each(F&& f) {
    f(seasonal_weight);
    f(seasonal_bias);
    f(trend_weight);
    f(trend_bias);
  }
  template <class F>
  void for_each(F&& f) const {
    f(seasonal_weight);
    f(seasonal_bias);
    f(trend_weight);
    f(trend_bias);
  }

  std::size_t parameter_count() const noexcept {
    return seasonal_weight.size() + seasonal_bias.size() + trend_weight.size() +
           trend_bias.size();
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const std::vector<double>& v) {
      for (double x : v) ok = ok && std::isfinite(x);
    });
    return ok;
  }

  friend bool operator==(const LinearParams&, const LinearParams&) = default;
};

using GradientSet = LinearParams;

struct LinearForecaster {
  ModelShape shape;
  LinearParams params;
};

// Seasonal and trend predictions. The combined forecast is always derived
// as their elementwise sum.
class ForecastOutput {
public:
  ForecastOutput() = default;
  ForecastOutput(Tensor3 seasonal, Tensor3 trend)
      : seasonal_(std::move(seasonal)), trend_(std::move(trend)) {
    require_same_shape(seasonal_, trend_, "ForecastOutput");
    combined_ = seasonal_;
    for (std::size_t k = 0; k < combined_.size(); ++k) combined_.data()[k] += trend_.data()[k];
  }

  const Tensor3& seasonal_pred() const noexcept { return seasonal_; }
  const Tensor3& trend_pred() const noexcept { return trend_; }
  const Tensor3& combined() const noexcept { return combined_; }

private:
  Tensor3 seasonal_;
  Tensor3 trend_;
  Tensor3 combined_;
};

enum class InitScheme {
  uniform_average,  // every weight 1/L, biases zero
  scaled_random,    // U(-1/sqrt(L), 1/sqrt(L)) for weights and biases
};

inline LinearForecaster init(const ModelShape& shape, std::uint64_t seed = 0,
                             InitScheme scheme = InitScheme::uniform_average) {
  if (shape.input_length < 1 || shape.horizon < 1 || shape.channels < 1) {
    throw InvalidArgument("init: dimensions must be positive");
  }
  validate_kernel(shape.kernel);
  LinearForecaster m{shape, LinearParams::zeros(shape)};
  const double avg = 1.0 / static_cast<double>(shape.input_length);
  if (scheme == InitScheme::uniform_average) {
    std::fill(m.params.seasonal_weight.begin(), m.params.seasonal_weight.end(), avg);
    std::fill(m.params.trend_weight.begin(), m.params.trend_weight.end(), avg);
  } else {
    std::mt19937_64 rng(seed);
    const double bound = std::sqrt(avg);
    // Mapped by hand: std::uniform_real_distribution is not portable.
    const auto draw = [&] {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      return (2.0 * u - 1.0) * bound;
    };
    m.params.for_each([&](std::vector<double>& v) {
      for (double& x : v) x = draw();
    });
  }
  return m;
}

inline LinearForecaster init(std::size_t input_length, std::size_t horizon, std::size_t channels,
                             bool share_channels, std::uint64_t seed = 0,
                             InitScheme scheme = InitScheme::uniform_average) {
  return init(ModelShape{input_length, horizon, channels, share_channels, kDefaultKernel}, seed,
              scheme);
}

namespace detail {

inline void check_inputs(const ModelShape& s, const Tensor3& inputs) {
  if (inputs.steps() != s.input_length || inputs.channels() != s.channels) {
    throw InvalidArgument("model expects windows of " + std::to_string(s.input_length) + "x" +
                          std::to_string(s.channels) + ", got " + shape_string(inputs));
  }
}

// Decomposes one L x C window and transposes the result to C x L so each
// channel's history is contiguous.
inline void decompose_window_by_channel(std::span<const double> window, const ModelShape& s,
                                        std::vector<double>& scratch_s,
                                        std::vector<double>& scratch_t,
                                        std::vector<double>& seasonal_cl,
                                        std::vector<double>& trend_cl) {
  const auto L = s.input_length, C = s.channels;
  scratch_s.resize(L * C);
  scratch_t.resize(L * C);
  seasonal_cl.resize(L * C);
  trend_cl.resize(L * C);
  decompose_rows(window, L, C, s.kernel, scratch_s, scratch_t);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t c = 0; c < C; ++c) {
      seasonal_cl[c * L + l] = scratch_s[l * C + c];
      trend_cl[c * L + l] = scratch_t[l * C + c];
    }
  }
}

}  // namespace detail

// Decomposes every input window with the model's kernel and applies one
// linear map per stream: pred = W * x_stream + b.
inline ForecastOutput forward(const LinearForecaster& model, const Tensor3& inputs) {
  const auto& s = model.shape;
  detail::check_inputs(s, inputs);
  const auto N = inputs.n(), L = s.input_length, H = s.horizon, C = s.channels;
  Tensor3 seasonal(N, H, C), trend(N, H, C);
  std::vector<double> ss, st, xs, xt;
  const auto& p = model.params;
  for (std::size_t i = 0; i < N; ++i) {
    detail::decompose_window_by_channel(inputs.window(i), s, ss, st, xs, xt);
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t g = s.share_channels ? 0 : c;
      const double* xs_c = xs.data() + c * L;
      const double* xt_c = xt.data() + c * L;
      for (std::size_t h = 0; h < H; ++h) {
        const double* ws = p.seasonal_weight.data() + (g * H + h) * L;
        const double* wt = p.trend_weight.data() + (g * H + h) * L;
        double acc_s = p.seasonal_bias[g * H + h];
        double acc_t = p.trend_bias[g * H + h];
        for (std::size_t l = 0; l < L; ++l) {
          acc_s += ws[l] * xs_c[l];
          acc_t += wt[l] * xt_c[l];
        }
        seasonal(i, h, c) = acc_s;
        trend(i, h, c) = acc_t;
      }
    }
  }
  return ForecastOutput(std::move(seasonal), std::move(trend));
}

// Gradients of a scalar loss with respect to every parameter, given the
// loss's gradients with respect to the two prediction streams. Any gradient
// flowing into the combined forecast must already be added to both streams.
inline GradientSet backward(const LinearForecaster& model, const Tensor3& inputs,
                            const Tensor3& grad_seasonal, const Tensor3& grad_trend) {
  const auto& s = model.shape;
  detail::check_inputs(s, inputs);
  require_same_shape(grad_seasonal, grad_trend, "backward");
  if (grad_seasonal.n() != inputs.n() || grad_seasonal.steps() != s.horizon ||
      grad_seasonal.channels() != s.channels) {
    throw InvalidArgument("backward: gradient shape " + shape_string(grad_seasonal) +
                          " does not match model output");
  }
  const auto N = inputs.n(), L = s.input_length, H = s.horizon, C = s.channels;
  GradientSet g = LinearParams::zeros(s);
  std::vector<double> ss, st, xs, xt;
  for (std::size_t i = 0; i < N; ++i) {
    detail::decompose_window_by_channel(inputs.window(i), s, ss, st, xs, xt);
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t grp = s.share_channels ? 0 : c;
      const double* xs_c = xs.data() + c * L;
      const double* xt_c = xt.data() + c * L;
      for (std::size_t h = 0; h < H; ++h) {
        const double gs = grad_seasonal(i, h, c);
        const double gt = grad_trend(i, h, c);
        g.seasonal_bias[grp * H + h] += gs;
        g.trend_bias[grp * H + h] += gt;
        double* dws = g.seasonal_weight.data() + (grp * H + h) * L;
        double* dwt = g.trend_weight.data() + (grp * H + h) * L;
        for (std::size_t l = 0; l < L; ++l) {
          dws[l] += gs * xs_c[l];
          dwt[l] += gt * xt_c[l];
        }
      }
    }
  }
  return g;
}

inline GradientSet backward(const LinearForecaster& model, const Tensor3& inputs,
                            const ForecastOutput& output, const Tensor3& grad_seasonal,
                            const Tensor3& grad_trend) {
  require_same_shape(output.seasonal_pred(), grad_seasonal, "backward");
  return backward(model, inputs, grad_seasonal, grad_trend);
}

}  // namespace hlf
