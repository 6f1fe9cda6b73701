// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgetrain/model.hpp"
#include "edgetrain/tensor.hpp"

namespace edgetrain {

enum class LayoutKind { BCHW, BHWC_REUSE, RESHAPED };
enum class Process { FP, BP, WU };
enum class Channel { IFM, OFM, WEI, OUT };

inline constexpr std::array<Process, 3> kProcesses{Process::FP, Process::BP, Process::WU};
inline constexpr std::array<Channel, 4> kChannels{Channel::IFM, Channel::OFM, Channel::WEI,
                                                  Channel::OUT};
inline constexpr std::array<LayoutKind, 3> kLayouts{LayoutKind::BCHW, LayoutKind::BHWC_REUSE,
                                                    LayoutKind::RESHAPED};

std::string_view to_string(LayoutKind kind) noexcept;
std::string_view to_string(Process process) noexcept;
std::string_view to_string(Channel channel) noexcept;
LayoutKind parse_layout_kind(std::string_view text);
Process parse_process(std::string_view text);

// Tiling of one process of one layer: spatial tile and on-chip channel block.
struct ProcessTile {
  std::int64_t tr = 1;
  std::int64_t tc = 1;
  std::int64_t m_on = 1;

  friend bool operator==(const ProcessTile&, const ProcessTile&) = default;
};

struct LayerTilePlan {
  ProcessTile fp;
  ProcessTile bp;
  ProcessTile wu;

  [[nodiscard]] const ProcessTile& at(Process p) const noexcept;
  [[nodiscard]] ProcessTile& at(Process p) noexcept;
  friend bool operator==(const LayerTilePlan&, const LayerTilePlan&) = default;
};

struct BufferBanks {
  std::int64_t ifm = 0;
  std::int64_t ofm = 0;
  std::int64_t wei = 0;

  friend bool operator==(const BufferBanks&, const BufferBanks&) = default;
};

struct TilePlan {
  std::int64_t tm = 16;
  std::int64_t tn = 16;
  std::vector<LayerTilePlan> layers;
  std::optional<BufferBanks> banks;

  friend bool operator==(const TilePlan&, const TilePlan&) = default;
};

// Output/input extents of one process. BP produces the layer's input loss, so
// its output is N x R_in x C_in and it consumes M channels.
struct ProcessGeometry {
  std::int64_t out_ch = 0;
  std::int64_t in_ch = 0;
  std::int64_t out_rows = 0;
  std::int64_t out_cols = 0;
};

ProcessGeometry process_geometry(const LayerSpec& layer, Process process) noexcept;

// Whether a process exists for a layer at all; first_conv marks the layer
// whose backward pass is never run.
bool process_applicable(const LayerSpec& layer, Process process, bool first_conv) noexcept;

// Full-extent default tiling for a layer.
LayerTilePlan default_layer_plan(const LayerSpec& layer);
TilePlan default_plan(const ShapedNetwork& net, std::int64_t tile);

// Throws InvalidPlan when a tile is out of bounds for the layer.
void validate_tile(const LayerSpec& layer, Process process, const ProcessTile& tile,
                   std::int64_t tm);
// Throws PlanMismatch when the plan does not describe the network.
void validate_plan(const TilePlan& plan, const ShapedNetwork& net);
// Structural rules every scheduled plan satisfies; returns the violations.
std::vector<std::string> plan_rule_violations(const TilePlan& plan, const ShapedNetwork& net);

struct LayoutParams {
  std::int64_t tm = 16;
  std::int64_t tn = 16;
  // Partial channel groups are stored padded to a multiple of this width.
  std::int64_t align = 1;
};

inline LayoutParams layout_params(const TilePlan& plan, std::int64_t align = 1) {
  return {plan.tm, plan.tn, align};
}

using Coord4 = std::array<std::int64_t, 4>;

// Half-open 4-D box of tensor coordinates.
struct Box {
  Coord4 lo{};
  Coord4 hi{};

  [[nodiscard]] std::int64_t count() const noexcept {
    return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]) * (hi[3] - lo[3]);
  }
  [[nodiscard]] bool empty() const noexcept { return count() <= 0; }
  static Box whole(const Dims4& d) { return {{0, 0, 0, 0}, d.as_array()}; }
  friend bool operator==(const Box&, const Box&) = default;
};

// Address map of one feature tensor (B, channels, rows, cols).
class FeatureLayout {
 public:
  FeatureLayout(LayoutKind kind, Dims4 dims, LayoutParams params);

  [[nodiscard]] LayoutKind kind() const noexcept { return kind_; }
  [[nodiscard]] const Dims4& dims() const noexcept { return dims_; }
  [[nodiscard]] std::int64_t group() const noexcept { return group_; }
  [[nodiscard]] std::int64_t groups() const noexcept { return ceil_div(dims_.d1, group_); }
  [[nodiscard]] std::int64_t group_width(std::int64_t g) const noexcept {
    return std::min(group_, dims_.d1 - g * group_);
  }
  // Words per pixel of group g in the stored image.
  [[nodiscard]] std::int64_t stored_width(std::int64_t g) const noexcept;
  [[nodiscard]] std::uint64_t words() const noexcept;
  [[nodiscard]] std::uint64_t addr(std::int64_t b, std::int64_t ch, std::int64_t r,
                                   std::int64_t c) const;

  // Calls f(start, len) for ascending contiguous spans covering the box,
  // including pad slots of fully covered partial groups.
  template <typename F>
  void for_each_run(const Box& box, F&& f) const;
  // Calls f(addr, coord, is_pad) per stored word in ascending address order.
  template <typename F>
  void for_each_word(const Box& box, F&& f) const;

 private:
  [[nodiscard]] std::uint64_t group_base(std::int64_t b, std::int64_t g) const noexcept;

  LayoutKind kind_;
  Dims4 dims_;
  std::int64_t group_;
  std::int64_t align_;
  std::uint64_t image_words_ = 0;
};

// Address map of one weight tensor (M, N, K, K).
class WeightLayout {
 public:
  WeightLayout(LayoutKind kind, Dims4 dims, LayoutParams params);

  [[nodiscard]] LayoutKind kind() const noexcept { return kind_; }
  [[nodiscard]] const Dims4& dims() const noexcept { return dims_; }
  [[nodiscard]] std::uint64_t words() const noexcept {
    return static_cast<std::uint64_t>(dims_.size());
  }
  [[nodiscard]] std::uint64_t addr(std::int64_t m, std::int64_t n, std::int64_t kr,
                                   std::int64_t kc) const;

  template <typename F>
  void for_each_run(const Box& box, F&& f) const;
  template <typename F>
  void for_each_word(const Box& box, F&& f) const;

 private:
  [[nodiscard]] std::int64_t tile_m(std::int64_t mt) const noexcept {
    return std::min(tm_, dims_.d0 - mt * tm_);
  }
  [[nodiscard]] std::int64_t tile_n(std::int64_t nt) const noexcept {
    return std::min(tn_, dims_.d1 - nt * tn_);
  }
  [[nodiscard]] std::uint64_t tile_base(std::int64_t mt, std::int64_t nt) const noexcept;
  template <typename F>
  void for_each_tile(const Box& box, F&& f) const;

  LayoutKind kind_;
  Dims4 dims_;
  std::int64_t tm_;
  std::int64_t tn_;
};

class OperandLayout {
 public:
  OperandLayout(FeatureLayout f) : impl_(std::move(f)) {}  // NOLINT(google-explicit-constructor)
  OperandLayout(WeightLayout w) : impl_(std::move(w)) {}   // NOLINT(google-explicit-constructor)

  [[nodiscard]] const Dims4& dims() const noexcept {
    return std::visit([](const auto& l) -> const Dims4& { return l.dims(); }, impl_);
  }
  [[nodiscard]] std::uint64_t words() const noexcept {
    return std::visit([](const auto& l) { return l.words(); }, impl_);
  }
  [[nodiscard]] std::uint64_t addr(const Coord4& c) const {
    return std::visit([&](const auto& l) { return l.addr(c[0], c[1], c[2], c[3]); }, impl_);
  }
  template <typename F>
  void for_each_run(const Box& box, F&& f) const {
    std::visit([&](const auto& l) { l.for_each_run(box, f); }, impl_);
  }
  template <typename F>
  void for_each_word(const Box& box, F&& f) const {
    std::visit([&](const auto& l) { l.for_each_word(box, f); }, impl_);
  }
  [[nodiscard]] bool is_weight() const noexcept {
    return std::holds_alternative<WeightLayout>(impl_);
  }

 private:
  std::variant<FeatureLayout, WeightLayout> impl_;
};

std::uint64_t feature_addr(LayoutKind kind, const Dims4& dims, const LayoutParams& params,
                           std::int64_t b, std::int64_t ch, std::int64_t r, std::int64_t c);
std::uint64_t weight_addr(LayoutKind kind, const Dims4& dims, const LayoutParams& params,
                          std::int64_t m, std::int64_t n, std::int64_t kr, std::int64_t kc);

struct Region {
  std::string name;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;

  [[nodiscard]] std::uint64_t end() const noexcept { return offset + length; }
  friend bool operator==(const Region&, const Region&) = default;
};

// Regions are laid out back to back in insertion order.
class AddressMap {
 public:
  const Region& add(std::string name, std::uint64_t length);
  [[nodiscard]] const Region& at(std::string_view name) const;
  [[nodiscard]] const Region* find(std::string_view name) const noexcept;
  [[nodiscard]] const std::vector<Region>& regions() const noexcept { return regions_; }
  [[nodiscard]] std::uint64_t total_words() const noexcept { return next_; }

 private:
  std::vector<Region> regions_;
  std::uint64_t next_ = 0;
};

class DramImage {
 public:
  explicit DramImage(AddressMap map);

  [[nodiscard]] const AddressMap& map() const noexcept { return map_; }
  [[nodiscard]] std::span<std::uint32_t> words() noexcept { return words_; }
  [[nodiscard]] std::span<const std::uint32_t> words() const noexcept { return words_; }

 private:
  AddressMap map_;
  std::vector<std::uint32_t> words_;
};

// Writes the tensor into the region; pad slots are zeroed.
void pack(const Tensor& tensor, const OperandLayout& layout, DramImage& image,
          const Region& region);
Tensor unpack(const OperandLayout& layout, const DramImage& image, const Region& region);

// ---------------------------------------------------------------------------

template <typename F>
void FeatureLayout::for_each_run(const Box& box, F&& f) const {
  const auto& [lo, hi] = box;
  switch (kind_) {
    case LayoutKind::BCHW:
      for (std::int64_t b = lo[0]; b < hi[0]; ++b)
        for (std::int64_t ch = lo[1]; ch < hi[1]; ++ch)
          for (std::int64_t r = lo[2]; r < hi[2]; ++r)
            f(addr(b, ch, r, lo[3]), static_cast<std::uint64_t>(hi[3] - lo[3]));
      return;
    case LayoutKind::BHWC_REUSE:
      for (std::int64_t b = lo[0]; b < hi[0]; ++b)
        for (std::int64_t r = lo[2]; r < hi[2]; ++r)
          for (std::int64_t c = lo[3]; c < hi[3]; ++c)
            f(addr(b, lo[1], r, c), static_cast<std::uint64_t>(hi[1] - lo[1]));
      return;
    case LayoutKind::RESHAPED:
      for (std::int64_t b = lo[0]; b < hi[0]; ++b) {
        for (std::int64_t g = lo[1] / group_; g * group_ < hi[1]; ++g) {
          const std::int64_t first = std::max(lo[1], g * group_) - g * group_;
          const std::int64_t last = std::min(hi[1], g * group_ + group_width(g)) - g * group_;
          const std::int64_t sw = stored_width(g);
          const bool whole = first == 0 && last == group_width(g);
          const std::int64_t span = whole ? sw : last - first;
          const std::uint64_t base = group_base(b, g);
          for (std::int64_t r = lo[2]; r < hi[2]; ++r) {
            const std::uint64_t row = base + static_cast<std::uint64_t>(r * dims_.d3 * sw);
            if (whole) {
              f(row + static_cast<std::uint64_t>(lo[3] * sw),
                static_cast<std::uint64_t>((hi[3] - lo[3]) * sw));
              continue;
            }
            for (std::int64_t c = lo[3]; c < hi[3]; ++c)
              f(row + static_cast<std::uint64_t>(c * sw + first), static_cast<std::uint64_t>(span));
          }
        }
      }
      return;
  }
}

template <typename F>
void FeatureLayout::for_each_word(const Box& box, F&& f) const {
  const auto& [lo, hi] = box;
  switch (kind_) {
    case LayoutKind::BCHW:
      for (std::int64_t b = lo[0]; b < hi[0]; ++b)
        for (std::int64_t ch = lo[1]; ch < hi[1]; ++ch)
          for (std::int64_t r = lo[2]; r < hi[2]; ++r)
            for (std::int64_t c = lo[3]; c < hi[3]; ++c)
              f(addr(b, ch, r, c), Coord4{b, ch, r, c}, false);
      return;
    case LayoutKind::BHWC_REUSE:
      for (std::int64_t b = lo[0]; b < hi[0]; ++b)
        for (std::int64_t r = lo[2]; r < hi[2]; ++r)
          for (std::int64_t c = lo[3]; c < hi[3]; ++c)
            for (std::int64_t ch = lo[1]; ch < hi[1]; ++ch)
              f(addr(b, ch, r, c), Coord4{b, ch, r, c}, false);
      return;
    case LayoutKind::RESHAPED:
      for (std::int64_t b = lo[0]; b < hi[0]; ++b) {
        for (std::int64_t g = lo[1] / group_; g * group_ < hi[1]; ++g) {
          const std::int64_t width = group_width(g);
          const std::int64_t first = std::max(lo[1], g * group_) - g * group_;
          const std::int64_t last = std::min(hi[1], g * group_ + width) - g * group_;
          const std::int64_t sw = stored_width(g);
          const std::int64_t stop = (first == 0 && last == width) ? sw : last;
          const std::uint64_t base = group_base(b, g);
          for (std::int64_t r = lo[2]; r < hi[2]; ++r)
            for (std::int64_t c = lo[3]; c < hi[3]; ++c)
              for (std::int64_t k = first; k < stop; ++k)
                f(base + static_cast<std::uint64_t>((r * dims_.d3 + c) * sw + k),
                  Coord4{b, g * group_ + k, r, c}, k >= width);
        }
      }
      return;
  }
}

template <typename F>
void WeightLayout::for_each_tile(const Box& box, F&& f) const {
  for (std::int64_t mt = box.lo[0] / tm_; mt * tm_ < box.hi[0]; ++mt) {
    for (std::int64_t nt = box.lo[1] / tn_; nt * tn_ < box.hi[1]; ++nt) {
      const std::int64_t m0 = std::max(box.lo[0], mt * tm_) - mt * tm_;
      const std::int64_t m1 = std::min(box.hi[0], mt * tm_ + tile_m(mt)) - mt * tm_;
      const std::int64_t n0 = std::max(box.lo[1], nt * tn_) - nt * tn_;
      const std::int64_t n1 = std::min(box.hi[1], nt * tn_ + tile_n(nt)) - nt * tn_;
      f(mt, nt, m0, m1, n0, n1);
    }
  }
}

template <typename F>
void WeightLayout::for_each_run(const Box& box, F&& f) const {
  const auto& [lo, hi] = box;
  const std::int64_t K = dims_.d2;
  if (kind_ == LayoutKind::BCHW) {
    for (std::int64_t m = lo[0]; m < hi[0]; ++m)
      for (std::int64_t n = lo[1]; n < hi[1]; ++n)
        for (std::int64_t kr = lo[2]; kr < hi[2]; ++kr)
          f(addr(m, n, kr, lo[3]), static_cast<std::uint64_t>(hi[3] - lo[3]));
    return;
  }
  const bool full_kernel = lo[2] == 0 && lo[3] == 0 && hi[2] == K && hi[3] == K;
  for_each_tile(box, [&](std::int64_t mt, std::int64_t nt, std::int64_t m0, std::int64_t m1,
                         std::int64_t n0, std::int64_t n1) {
    const std::int64_t tmw = tile_m(mt);
    const std::int64_t tnw = tile_n(nt);
    const std::uint64_t base = tile_base(mt, nt);
    if (full_kernel && m0 == 0 && m1 == tmw && n0 == 0 && n1 == tnw) {
      f(base, static_cast<std::uint64_t>(tmw * tnw * K * K));
      return;
    }
    if (kind_ == LayoutKind::RESHAPED) {
      for (std::int64_t kr = lo[2]; kr < hi[2]; ++kr)
        for (std::int64_t kc = lo[3]; kc < hi[3]; ++kc)
          for (std::int64_t n = n0; n < n1; ++n)
            f(base + static_cast<std::uint64_t>(((kr * K + kc) * tnw + n) * tmw + m0),
              static_cast<std::uint64_t>(m1 - m0));
    } else {
      for (std::int64_t m = m0; m < m1; ++m)
        for (std::int64_t kr = lo[2]; kr < hi[2]; ++kr)
          for (std::int64_t kc = lo[3]; kc < hi[3]; ++kc)
            f(base + static_cast<std::uint64_t>(((m * K + kr) * K + kc) * tnw + n0),
              static_cast<std::uint64_t>(n1 - n0));
    }
  });
}

template <typename F>
void WeightLayout::for_each_word(const Box& box, F&& f) const {
  const auto& [lo, hi] = box;
  const std::int64_t K = dims_.d2;
  if (kind_ == LayoutKind::BCHW) {
    for (std::int64_t m = lo[0]; m < hi[0]; ++m)
      for (std::int64_t n = lo[1]; n < hi[1]; ++n)
        for (std::int64_t kr = lo[2]; kr < hi[2]; ++kr)
          for (std::int64_t kc = lo[3]; kc < hi[3]; ++kc)
            f(addr(m, n, kr, kc), Coord4{m, n, kr, kc}, false);
    return;
  }
  for_each_tile(box, [&](std::int64_t mt, std::int64_t nt, std::int64_t m0, std::int64_t m1,
                         std::int64_t n0, std::int64_t n1) {
    const std::int64_t tmw = tile_m(mt);
    const std::int64_t tnw = tile_n(nt);
    const std::uint64_t base = tile_base(mt, nt);
    if (kind_ == LayoutKind::RESHAPED) {
      for (std::int64_t kr = lo[2]; kr < hi[2]; ++kr)
        for (std::int64_t kc = lo[3]; kc < hi[3]; ++kc)
          for (std::int64_t n = n0; n < n1; ++n)
            for (std::int64_t m = m0; m < m1; ++m)
              f(base + static_cast<std::uint64_t>(((kr * K + kc) * tnw + n) * tmw + m),
                Coord4{mt * tm_ + m, nt * tn_ + n, kr, kc}, false);
    } else {
      for (std::int64_t m = m0; m < m1; ++m)
        for (std::int64_t kr = lo[2]; kr < hi[2]; ++kr)
          for (std::int64_t kc = lo[3]; kc < hi[3]; ++kc)
            for (std::int64_t n = n0; n < n1; ++n)
              f(base + static_cast<std::uint64_t>(((m * K + kr) * K + kc) * tnw + n),
                Coord4{mt * tm_ + m, nt * tn_ + n, kr, kc}, false);
    }
  });
}

}  // namespace edgetrain
