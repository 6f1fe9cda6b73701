// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgetrain {

using Cycles = std::int64_t;

enum class LayerKind { Conv, FC, ReLU, MaxPool, AvgPool, BatchNorm, SoftmaxXent };

std::string_view to_string(LayerKind kind) noexcept;
LayerKind parse_layer_kind(std::string_view text);

[[nodiscard]] constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) noexcept {
  return (a + b - 1) / b;
}
[[nodiscard]] constexpr std::int64_t round_up(std::int64_t a, std::int64_t b) noexcept {
  return ceil_div(a, b) * b;
}

// Channels, rows and columns of one image's feature map.
struct FeatureShape {
  std::int64_t channels = 0;
  std::int64_t rows = 0;
  std::int64_t cols = 0;

  [[nodiscard]] std::int64_t size() const noexcept { return channels * rows * cols; }
  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  std::string name;
  std::int64_t M = 0;  // output channels
  std::int64_t N = 0;  // input channels
  std::int64_t R = 0;  // output rows
  std::int64_t C = 0;  // output cols
  std::int64_t K = 1;
  std::int64_t S = 1;
  std::int64_t pad = 0;
  // Input rows/cols as seen by this layer; zero until shape inference runs.
  // FC layers see their input flattened to N x 1 x 1.
  std::int64_t R_in = 0;
  std::int64_t C_in = 0;

  [[nodiscard]] bool conv_like() const noexcept {
    return kind == LayerKind::Conv || kind == LayerKind::FC;
  }
  [[nodiscard]] bool pooling() const noexcept {
    return kind == LayerKind::MaxPool || kind == LayerKind::AvgPool;
  }
  [[nodiscard]] FeatureShape input_shape() const noexcept { return {N, R_in, C_in}; }
  [[nodiscard]] FeatureShape output_shape() const noexcept { return {M, R, C}; }
  // Multiply-accumulates per image in the forward pass.
  [[nodiscard]] std::int64_t macs() const noexcept { return M * N * R * C * K * K; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

LayerSpec make_conv(std::int64_t M, std::int64_t N, std::int64_t R, std::int64_t C,
                    std::int64_t K, std::int64_t S, std::int64_t pad = 0,
                    std::string name = {});
LayerSpec make_fc(std::int64_t M, std::int64_t N, std::string name = {});
LayerSpec make_pool(LayerKind kind, std::int64_t K, std::int64_t S, std::string name = {});
LayerSpec make_simple(LayerKind kind, std::string name = {});

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  std::int64_t batch = 1;
  double learning_rate = 0.01;
  // Shape of one input image; inferred from the first layer when absent.
  std::optional<FeatureShape> input;
  // Presets ship standard topologies that are not ground truth for any result.
  bool preset = false;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// A network whose layers all carry resolved input dims and whose adjacent
// layers are shape-compatible. Only validate_and_infer constructs one.
class ShapedNetwork {
 public:
  ShapedNetwork() = default;

  [[nodiscard]] const NetworkSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::vector<LayerSpec>& layers() const noexcept { return spec_.layers; }
  [[nodiscard]] const LayerSpec& layer(std::size_t i) const { return spec_.layers.at(i); }
  [[nodiscard]] std::size_t size() const noexcept { return spec_.layers.size(); }
  [[nodiscard]] std::int64_t batch() const noexcept { return spec_.batch; }
  [[nodiscard]] const FeatureShape& input_shape() const noexcept { return *spec_.input; }
  // Shape of the activation entering layer i as produced upstream (not flattened).
  [[nodiscard]] const FeatureShape& activation_shape(std::size_t i) const {
    return activations_.at(i);
  }
  [[nodiscard]] bool has_loss() const noexcept;
  // Index of the first Conv/FC layer, which has no backward pass.
  [[nodiscard]] std::optional<std::size_t> first_conv_like() const noexcept;
  [[nodiscard]] ShapedNetwork with_batch(std::int64_t batch) const;

  friend bool operator==(const ShapedNetwork&, const ShapedNetwork&) = default;

 private:
  friend ShapedNetwork validate_and_infer(const NetworkSpec& net);
  NetworkSpec spec_;
  std::vector<FeatureShape> activations_;  // size() + 1 entries
};

ShapedNetwork validate_and_infer(const NetworkSpec& net);

// Training FLOPs per image: 2 x (3 x sum of conv/FC MACs - first-layer MACs).
std::int64_t count_train_ops(const ShapedNetwork& net);

struct DeviceSpec {
  std::string name;
  std::int64_t total_dsps = 2520;
  std::int64_t total_brams = 912;
  std::int64_t bram_bits = 36 * 1024;
  // Bits of each bank reachable at a one-word port width.
  std::int64_t bram_usable_bits = 32 * 1024;
  std::int64_t dsps_per_mac = 5;
  std::int64_t stream_width_words = 4;
  Cycles t_start = 400;
  std::int64_t bits_per_word = 32;
  double dsp_budget_frac = 0.80;
  double bram_budget_frac = 0.75;
  double clock_hz = 100e6;

  [[nodiscard]] std::int64_t dsp_budget() const noexcept;
  [[nodiscard]] std::int64_t bram_budget() const noexcept;
  void validate() const;

  friend bool operator==(const DeviceSpec&, const DeviceSpec&) = default;
};

}  // namespace edgetrain
