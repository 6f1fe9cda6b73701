// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures and 64-bit oracles for the unit tests.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "edgetrain/config_io.hpp"
#include "edgetrain/layout.hpp"
#include "edgetrain/model.hpp"
#include "edgetrain/tensor.hpp"

namespace edgetrain::testing {

inline ShapedNetwork preset_net(const std::string& name, std::int64_t batch = 0) {
  NetworkSpec spec = load_network(name);
  if (batch > 0) spec.batch = batch;
  return validate_and_infer(spec);
}

inline ShapedNetwork alexnet_conv(std::int64_t batch = 4) { return preset_net("alexnet_conv", batch); }

inline TilePlan published_plan(const ShapedNetwork& net) { return load_plan("alexnet_published", net); }

struct PublishedLayer {
  const char* name;
  Cycles fp;
  Cycles bp;  // zero where the table has no entry
  Cycles wu;
};

inline constexpr std::array<PublishedLayer, 5> kPublishedCycles{{
    {"conv1", 11'504'640, 0, 9'043'384},
    {"conv2", 7'309'808, 7'126'784, 7'423'616},
    {"conv3", 2'478'272, 2'566'987, 2'682'240},
    {"conv4", 3'646'400, 3'861'220, 3'960'960},
    {"conv5", 2'432'368, 2'618'372, 2'640'640},
}};
inline constexpr Cycles kPublishedTotal = 69'295'691;

inline std::size_t layer_index(const ShapedNetwork& net, const std::string& name) {
  for (std::size_t i = 0; i < net.size(); ++i)
    if (net.layer(i).name == name) return i;
  return net.size();
}

inline Dims4 input_dims(std::int64_t B, const LayerSpec& l) { return {B, l.N, l.R_in, l.C_in}; }
inline Dims4 output_dims(std::int64_t B, const LayerSpec& l) { return {B, l.M, l.R, l.C}; }

template <typename T = double>
TensorT<T> random_tensor(Dims4 dims, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  TensorT<T> t(dims);
  for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

inline double dot(const Tensor64& a, const Tensor64& b) {
  double s = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs(const Tensor64& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

// Largest elementwise difference relative to the larger tensor's peak.
inline double rel_error(const Tensor64& got, const Tensor64& want) {
  double diff = 0.0;
  for (std::int64_t i = 0; i < got.size(); ++i) diff = std::max(diff, std::abs(got[i] - want[i]));
  const double scale = std::max({max_abs(got), max_abs(want), 1e-30});
  return diff / scale;
}

// Direct six-loop correlation with zero padding.
inline Tensor64 conv_oracle(const Tensor64& a, const Tensor64& w, std::int64_t S, std::int64_t pad,
                             std::int64_t R, std::int64_t C) {
  const Dims4 ad = a.dims();
  const Dims4 wd = w.dims();
  Tensor64 out(Dims4{ad.d0, wd.d0, R, C});
  for (std::int64_t b = 0; b < ad.d0; ++b)
    for (std::int64_t m = 0; m < wd.d0; ++m)
      for (std::int64_t r = 0; r < R; ++r)
        for (std::int64_t c = 0; c < C; ++c) {
          double acc = 0.0;
          for (std::int64_t n = 0; n < wd.d1; ++n)
            for (std::int64_t kr = 0; kr < wd.d2; ++kr)
              for (std::int64_t kc = 0; kc < wd.d3; ++kc) {
                const std::int64_t y = r * S + kr - pad;
                const std::int64_t x = c * S + kc - pad;
                if (y < 0 || y >= ad.d2 || x < 0 || x >= ad.d3) continue;
                acc += w(m, n, kr, kc) * a(b, n, y, x);
              }
          out(b, m, r, c) = acc;
        }
  return out;
}

// Central differences of a scalar function of x, one coordinate at a time.
template <typename F>
Tensor64 numeric_gradient(Tensor64 x, F&& f, double step) {
  Tensor64 g(x.dims());
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f(x);
    x[i] = keep - step;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// A random conv layer small enough for brute-force checks.
inline LayerSpec random_conv(std::mt19937_64& rng, std::int64_t max_ch = 5, std::int64_t max_hw = 7) {
  std::uniform_int_distribution<std::int64_t> ch(1, max_ch);
  std::uniform_int_distribution<std::int64_t> k(1, 3);
  std::uniform_int_distribution<std::int64_t> s(1, 2);
  std::uniform_int_distribution<std::int64_t> hw(3, max_hw);
  LayerSpec l = make_conv(ch(rng), ch(rng), 0, 0, k(rng), s(rng));
  l.pad = std::uniform_int_distribution<std::int64_t>(0, l.K - 1)(rng);
  l.R_in = hw(rng);
  l.C_in = hw(rng);
  l.R = (l.R_in + 2 * l.pad - l.K) / l.S + 1;
  l.C = (l.C_in + 2 * l.pad - l.K) / l.S + 1;
  l.name = "conv";
  return l;
}

}  // namespace edgetrain::testing
