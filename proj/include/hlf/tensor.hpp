#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hlf/error.hpp"

namespace hlf {

// Dense row-major matrix of doubles.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw InvalidArgument("Matrix: data size " + std::to_string(data_.size()) +
                            " does not match shape " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Dense N x T x C tensor (windows x time steps x channels), row-major.
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(std::size_t n, std::size_t steps, std::size_t channels, double fill = 0.0)
      : n_(n), steps_(steps), channels_(channels), data_(n * steps * channels, fill) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t t, std::size_t c) noexcept {
    return data_[(i * steps_ + t) * channels_ + c];
  }
  double operator()(std::size_t i, std::size_t t, std::size_t c) const noexcept {
    return data_[(i * steps_ + t) * channels_ + c];
  }

  // The steps x channels slab of window i.
  std::span<double> window(std::size_t i) noexcept {
    return {data_.data() + i * steps_ * channels_, steps_ * channels_};
  }
  std::span<const double> window(std::size_t i) const noexcept {
    return {data_.data() + i * steps_ * channels_, steps_ * channels_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Tensor3& o) const noexcept {
    return n_ == o.n_ && steps_ == o.steps_ && channels_ == o.channels_;
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
  std::size_t n_ = 0;
  std::size_t steps_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

inline std::string shape_string(const Tensor3& t) {
  return std::to_string(t.n()) + "x" + std::to_string(t.steps()) + "x" +
         std::to_string(t.channels());
}

inline void require_same_shape(const Tensor3& a, const Tensor3& b, const char* what) {
  if (!a.same_shape(b)) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                          shape_string(b));
  }
}

}  // namespace hlf
