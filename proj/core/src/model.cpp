// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/model.hpp"

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "edgetrain/errors.hpp"

namespace edgetrain {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 7> kKindNames{{
    {LayerKind::Conv, "conv"},
    {LayerKind::FC, "fc"},
    {LayerKind::ReLU, "relu"},
    {LayerKind::MaxPool, "maxpool"},
    {LayerKind::AvgPool, "avgpool"},
    {LayerKind::BatchNorm, "batchnorm"},
    {LayerKind::SoftmaxXent, "softmax_xent"},
}};

std::string label(const LayerSpec& layer, std::size_t index) {
  std::string out = "layer " + std::to_string(index);
  if (!layer.name.empty()) out += " (" + layer.name + ")";
  return out;
}

std::int64_t window_out(std::int64_t in, std::int64_t pad, std::int64_t k, std::int64_t s) {
  return (in + 2 * pad - k) / s + 1;
}

// Checks a declared dim against an inferred one, filling it when undeclared.
void settle(std::int64_t& declared, std::int64_t inferred, const std::string& where,
            const char* field) {
  if (declared == 0) {
    declared = inferred;
    return;
  }
  require(declared == inferred, ErrorCode::ShapeMismatch,
          where + ": " + field + "=" + std::to_string(declared) + " but upstream gives " +
              std::to_string(inferred));
}

FeatureShape first_input(const LayerSpec& layer, std::size_t index) {
  const std::string where = label(layer, index);
  switch (layer.kind) {
    case LayerKind::Conv:
      require(layer.R >= 1 && layer.C >= 1 && layer.N >= 1, ErrorCode::InvalidLayer,
              where + ": first layer needs N, R and C or an explicit input shape");
      return {layer.N, (layer.R - 1) * layer.S + layer.K - 2 * layer.pad,
              (layer.C - 1) * layer.S + layer.K - 2 * layer.pad};
    case LayerKind::FC:
      return {layer.N, 1, 1};
    default:
      fail(ErrorCode::InvalidLayer, where + ": first layer needs an explicit input shape");
  }
}

void infer_layer(LayerSpec& layer, const FeatureShape& in, std::size_t index) {
  const std::string where = label(layer, index);
  switch (layer.kind) {
    case LayerKind::Conv: {
      require(layer.M >= 1 && layer.K >= 1 && layer.S >= 1 && layer.pad >= 0,
              ErrorCode::InvalidLayer, where + ": M, K, S must be >= 1 and pad >= 0");
      settle(layer.N, in.channels, where, "N");
      require(layer.K <= in.rows + 2 * layer.pad && layer.K <= in.cols + 2 * layer.pad,
              ErrorCode::InvalidLayer, where + ": kernel larger than padded input");
      layer.R_in = in.rows;
      layer.C_in = in.cols;
      settle(layer.R, window_out(in.rows, layer.pad, layer.K, layer.S), where, "R");
      settle(layer.C, window_out(in.cols, layer.pad, layer.K, layer.S), where, "C");
      break;
    }
    case LayerKind::FC: {
      require(layer.M >= 1, ErrorCode::InvalidLayer, where + ": M must be >= 1");
      require(layer.K == 1 && layer.S == 1 && layer.pad == 0 && layer.R <= 1 && layer.C <= 1,
              ErrorCode::InvalidLayer, where + ": FC layers are 1x1 with K=S=1, pad=0");
      settle(layer.N, in.size(), where, "N");
      layer.R = layer.C = 1;
      layer.R_in = layer.C_in = 1;
      break;
    }
    case LayerKind::ReLU:
    case LayerKind::BatchNorm: {
      settle(layer.N, in.channels, where, "N");
      settle(layer.M, in.channels, where, "M");
      settle(layer.R, in.rows, where, "R");
      settle(layer.C, in.cols, where, "C");
      layer.K = layer.S = 1;
      layer.pad = 0;
      layer.R_in = in.rows;
      layer.C_in = in.cols;
      break;
    }
    case LayerKind::MaxPool:
    case LayerKind::AvgPool: {
      require(layer.K >= 1 && layer.S >= 1 && layer.pad >= 0, ErrorCode::InvalidLayer,
              where + ": pooling needs K, S >= 1");
      require(layer.K <= in.rows + 2 * layer.pad && layer.K <= in.cols + 2 * layer.pad,
              ErrorCode::InvalidLayer, where + ": window larger than padded input");
      settle(layer.N, in.channels, where, "N");
      settle(layer.M, in.channels, where, "M");
      layer.R_in = in.rows;
      layer.C_in = in.cols;
      settle(layer.R, window_out(in.rows, layer.pad, layer.K, layer.S), where, "R");
      settle(layer.C, window_out(in.cols, layer.pad, layer.K, layer.S), where, "C");
      break;
    }
    case LayerKind::SoftmaxXent: {
      require(in.rows == 1 && in.cols == 1, ErrorCode::ShapeMismatch,
              where + ": softmax expects (classes, 1, 1) logits");
      settle(layer.N, in.channels, where, "N");
      settle(layer.M, in.channels, where, "M");
      layer.R = layer.C = layer.R_in = layer.C_in = 1;
      layer.K = layer.S = 1;
      layer.pad = 0;
      break;
    }
  }
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  if (text == "softmax") return LayerKind::SoftmaxXent;
  if (text == "bn") return LayerKind::BatchNorm;
  fail(ErrorCode::ConfigError, "unknown layer kind '" + std::string(text) + "'");
}

LayerSpec make_conv(std::int64_t M, std::int64_t N, std::int64_t R, std::int64_t C,
                    std::int64_t K, std::int64_t S, std::int64_t pad, std::string name) {
  LayerSpec l;
  l.kind = LayerKind::Conv;
  l.name = std::move(name);
  l.M = M;
  l.N = N;
  l.R = R;
  l.C = C;
  l.K = K;
  l.S = S;
  l.pad = pad;
  return l;
}

LayerSpec make_fc(std::int64_t M, std::int64_t N, std::string name) {
  LayerSpec l;
  l.kind = LayerKind::FC;
  l.name = std::move(name);
  l.M = M;
  l.N = N;
  l.R = l.C = 1;
  return l;
}

LayerSpec make_pool(LayerKind kind, std::int64_t K, std::int64_t S, std::string name) {
  LayerSpec l;
  l.kind = kind;
  l.name = std::move(name);
  l.K = K;
  l.S = S;
  return l;
}

LayerSpec make_simple(LayerKind kind, std::string name) {
  LayerSpec l;
  l.kind = kind;
  l.name = std::move(name);
  return l;
}

bool ShapedNetwork::has_loss() const noexcept {
  return !spec_.layers.empty() && spec_.layers.back().kind == LayerKind::SoftmaxXent;
}

std::optional<std::size_t> ShapedNetwork::first_conv_like() const noexcept {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (spec_.layers[i].conv_like()) return i;
  }
  return std::nullopt;
}

ShapedNetwork ShapedNetwork::with_batch(std::int64_t batch) const {
  NetworkSpec copy = spec_;
  copy.batch = batch;
  return validate_and_infer(copy);
}

ShapedNetwork validate_and_infer(const NetworkSpec& net) {
  require(!net.layers.empty(), ErrorCode::InvalidLayer, "network has no layers");
  require(net.batch >= 1, ErrorCode::InvalidLayer, "batch must be >= 1");
  require(net.learning_rate > 0.0 && std::isfinite(net.learning_rate), ErrorCode::InvalidLayer,
          "learning rate must be positive");

  ShapedNetwork out;
  out.spec_ = net;
  auto& layers = out.spec_.layers;
  FeatureShape current = net.input ? *net.input : first_input(layers.front(), 0);
  require(current.channels >= 1 && current.rows >= 1 && current.cols >= 1,
          ErrorCode::InvalidLayer, "input shape must be positive");
  out.spec_.input = current;
  out.activations_.push_back(current);

  std::map<LayerKind, int> seen_kinds;
  std::set<std::string> names;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerSpec& layer = layers[i];
    const int ordinal = ++seen_kinds[layer.kind];
    if (layer.name.empty()) layer.name = std::string(to_string(layer.kind)) + std::to_string(ordinal);
    require(names.insert(layer.name).second, ErrorCode::InvalidLayer,
            "duplicate layer name '" + layer.name + "'");
    if (layer.kind == LayerKind::SoftmaxXent) {
      require(i + 1 == layers.size(), ErrorCode::InvalidLayer,
              label(layer, i) + ": softmax loss must be the terminal layer");
    }
    infer_layer(layer, current, i);
    current = layer.output_shape();
    out.activations_.push_back(current);
  }
  return out;
}

std::int64_t count_train_ops(const ShapedNetwork& net) {
  std::int64_t sum = 0;
  std::int64_t first = 0;
  bool seen = false;
  for (const auto& layer : net.layers()) {
    if (!layer.conv_like()) continue;
    sum += layer.macs();
    if (!seen) {
      first = layer.macs();
      seen = true;
    }
  }
  return 2 * (3 * sum - first);
}

std::int64_t DeviceSpec::dsp_budget() const noexcept {
  return static_cast<std::int64_t>(std::floor(dsp_budget_frac * static_cast<double>(total_dsps) + 1e-9));
}

std::int64_t DeviceSpec::bram_budget() const noexcept {
  return static_cast<std::int64_t>(std::floor(bram_budget_frac * static_cast<double>(total_brams) + 1e-9));
}

void DeviceSpec::validate() const {
  auto positive = [](auto v) { return v > 0; };
  require(positive(total_dsps) && positive(total_brams) && positive(bram_bits) &&
              positive(bram_usable_bits) && positive(dsps_per_mac) &&
              positive(stream_width_words) && positive(t_start) && positive(bits_per_word),
          ErrorCode::ConfigError, "device fields must be positive");
  require(bram_usable_bits <= bram_bits, ErrorCode::ConfigError,
          "usable bank bits exceed bank size");
  require(dsp_budget_frac > 0.0 && dsp_budget_frac <= 1.0 && bram_budget_frac > 0.0 &&
              bram_budget_frac <= 1.0,
          ErrorCode::ConfigError, "budget fractions must lie in (0, 1]");
  require(clock_hz > 0.0, ErrorCode::ConfigError, "clock must be positive");
}

}  // namespace edgetrain
