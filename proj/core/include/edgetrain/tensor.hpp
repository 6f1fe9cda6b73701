// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgetrain/errors.hpp"
#include "edgetrain/model.hpp"

namespace edgetrain {

// (B, channels, rows, cols) for features; (M, N, K, K) for weights.
struct Dims4 {
  std::int64_t d0 = 0;
  std::int64_t d1 = 0;
  std::int64_t d2 = 0;
  std::int64_t d3 = 0;

  [[nodiscard]] std::int64_t size() const noexcept { return d0 * d1 * d2 * d3; }
  [[nodiscard]] std::array<std::int64_t, 4> as_array() const noexcept { return {d0, d1, d2, d3}; }
  [[nodiscard]] std::string str() const {
    return "(" + std::to_string(d0) + "," + std::to_string(d1) + "," + std::to_string(d2) + "," +
           std::to_string(d3) + ")";
  }
  friend bool operator==(const Dims4&, const Dims4&) = default;
};

inline Dims4 feature_dims(std::int64_t batch, const FeatureShape& s) {
  return {batch, s.channels, s.rows, s.cols};
}
inline Dims4 weight_dims(const LayerSpec& l) { return {l.M, l.N, l.K, l.K}; }

template <typename T>
class TensorT {
 public:
  using value_type = T;

  TensorT() = default;
  explicit TensorT(Dims4 dims, T fill = T{})
      : dims_(dims), data_(static_cast<std::size_t>(dims.size()), fill) {}
  TensorT(Dims4 dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
    require(static_cast<std::int64_t>(data_.size()) == dims_.size(), ErrorCode::ShapeMismatch,
            "tensor data length does not match dims " + dims_.str());
  }

  [[nodiscard]] const Dims4& dims() const noexcept { return dims_; }
  [[nodiscard]] std::int64_t size() const noexcept { return dims_.size(); }
  [[nodiscard]] std::span<T> data() noexcept { return data_; }
  [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& values() const noexcept { return data_; }

  [[nodiscard]] std::int64_t offset(std::int64_t a, std::int64_t b, std::int64_t c,
                                    std::int64_t d) const noexcept {
    return ((a * dims_.d1 + b) * dims_.d2 + c) * dims_.d3 + d;
  }
  T& operator()(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) noexcept {
    return data_[static_cast<std::size_t>(offset(a, b, c, d))];
  }
  const T& operator()(std::int64_t a, std::int64_t b, std::int64_t c,
                      std::int64_t d) const noexcept {
    return data_[static_cast<std::size_t>(offset(a, b, c, d))];
  }
  T& operator[](std::int64_t i) noexcept { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const noexcept { return data_[static_cast<std::size_t>(i)]; }

  // Same data under new dims of equal size.
  [[nodiscard]] TensorT reshaped(Dims4 dims) const {
    require(dims.size() == dims_.size(), ErrorCode::ShapeMismatch,
            "cannot reshape " + dims_.str() + " to " + dims.str());
    return TensorT(dims, data_);
  }

  template <typename U>
  [[nodiscard]] TensorT<U> cast() const {
    return TensorT<U>(dims_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const TensorT&, const TensorT&) = default;

 private:
  Dims4 dims_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

inline void require_dims(const Dims4& got, const Dims4& want, const char* what) {
  require(got == want, ErrorCode::ShapeMismatch,
          std::string(what) + ": expected " + want.str() + ", got " + got.str());
}

}  // namespace edgetrain
