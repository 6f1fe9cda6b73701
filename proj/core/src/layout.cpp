// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/layout.hpp"

#include <bit>
#include <cstring>

namespace edgetrain {

std::string_view to_string(LayoutKind kind) noexcept {
  switch (kind) {
    case LayoutKind::BCHW: return "bchw";
    case LayoutKind::BHWC_REUSE: return "bhwc";
    case LayoutKind::RESHAPED: return "reshaped";
  }
  return "unknown";
}

std::string_view to_string(Process process) noexcept {
  switch (process) {
    case Process::FP: return "FP";
    case Process::BP: return "BP";
    case Process::WU: return "WU";
  }
  return "unknown";
}

std::string_view to_string(Channel channel) noexcept {
  switch (channel) {
    case Channel::IFM: return "IFM";
    case Channel::OFM: return "OFM";
    case Channel::WEI: return "WEI";
    case Channel::OUT: return "OUT";
  }
  return "unknown";
}

LayoutKind parse_layout_kind(std::string_view text) {
  if (text == "bchw" || text == "BCHW") return LayoutKind::BCHW;
  if (text == "bhwc" || text == "BHWC" || text == "bhwc_reuse" || text == "BHWC_REUSE")
    return LayoutKind::BHWC_REUSE;
  if (text == "reshaped" || text == "RESHAPED") return LayoutKind::RESHAPED;
  fail(ErrorCode::ConfigError, "unknown layout '" + std::string(text) + "'");
}

Process parse_process(std::string_view text) {
  if (text == "FP" || text == "fp") return Process::FP;
  if (text == "BP" || text == "bp") return Process::BP;
  if (text == "WU" || text == "wu") return Process::WU;
  fail(ErrorCode::ConfigError, "unknown process '" + std::string(text) + "'");
}

const ProcessTile& LayerTilePlan::at(Process p) const noexcept {
  switch (p) {
    case Process::FP: return fp;
    case Process::BP: return bp;
    case Process::WU: return wu;
  }
  return fp;
}

ProcessTile& LayerTilePlan::at(Process p) noexcept {
  return const_cast<ProcessTile&>(static_cast<const LayerTilePlan&>(*this).at(p));
}

ProcessGeometry process_geometry(const LayerSpec& l, Process process) noexcept {
  if (process == Process::BP) return {l.N, l.M, l.R_in, l.C_in};
  return {l.M, l.N, l.R, l.C};
}

bool process_applicable(const LayerSpec& l, Process process, bool first_conv) noexcept {
  switch (l.kind) {
    case LayerKind::Conv:
    case LayerKind::FC:
      return process != Process::BP || !first_conv;
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
    case LayerKind::BatchNorm:
      return process != Process::WU;
    case LayerKind::ReLU:
    case LayerKind::SoftmaxXent:
      return false;
  }
  return false;
}

LayerTilePlan default_layer_plan(const LayerSpec& l) {
  return {{l.R, l.C, l.M}, {l.R_in, l.C_in, l.N}, {l.R, l.C, l.M}};
}

TilePlan default_plan(const ShapedNetwork& net, std::int64_t tile) {
  TilePlan plan;
  plan.tm = plan.tn = tile;
  for (const auto& l : net.layers()) plan.layers.push_back(default_layer_plan(l));
  return plan;
}

void validate_tile(const LayerSpec& l, Process process, const ProcessTile& t, std::int64_t tm) {
  require(tm >= 1, ErrorCode::InvalidPlan, "Tm must be >= 1");
  require(l.K >= 1 && l.S >= 1, ErrorCode::InvalidPlan, "layer kernel and stride must be >= 1");
  const ProcessGeometry g = process_geometry(l, process);
  const std::string where = "layer '" + l.name + "' " + std::string(to_string(process));
  require(t.tr >= 1 && t.tr <= g.out_rows, ErrorCode::InvalidPlan,
          where + ": Tr=" + std::to_string(t.tr) + " outside [1, " + std::to_string(g.out_rows) + "]");
  require(t.tc >= 1 && t.tc <= g.out_cols, ErrorCode::InvalidPlan,
          where + ": Tc=" + std::to_string(t.tc) + " outside [1, " + std::to_string(g.out_cols) + "]");
  if (l.conv_like()) {
    require(t.m_on >= 1 && t.m_on <= g.out_ch, ErrorCode::InvalidPlan,
            where + ": M_on=" + std::to_string(t.m_on) + " outside [1, " +
                std::to_string(g.out_ch) + "]");
  }
}

void validate_plan(const TilePlan& plan, const ShapedNetwork& net) {
  require(plan.layers.size() == net.size(), ErrorCode::PlanMismatch,
          "plan has " + std::to_string(plan.layers.size()) + " layers, network has " +
              std::to_string(net.size()));
  require(plan.tm >= 1 && plan.tn >= 1, ErrorCode::InvalidPlan, "Tm and Tn must be >= 1");
  const auto first = net.first_conv_like();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerSpec& l = net.layer(i);
    for (Process p : kProcesses) {
      if (!process_applicable(l, p, first == i)) continue;
      validate_tile(l, p, plan.layers[i].at(p), plan.tm);
    }
  }
}

std::vector<std::string> plan_rule_violations(const TilePlan& plan, const ShapedNetwork& net) {
  std::vector<std::string> out;
  if (plan.tm != plan.tn) out.push_back("Tm != Tn");
  if (plan.layers.size() != net.size()) {
    out.push_back("layer count mismatch");
    return out;
  }
  const auto first = net.first_conv_like();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerSpec& l = net.layer(i);
    if (!l.conv_like()) continue;
    for (Process p : kProcesses) {
      if (!process_applicable(l, p, first == i)) continue;
      const ProcessTile& t = plan.layers[i].at(p);
      const ProcessGeometry g = process_geometry(l, p);
      const std::string where = l.name + " " + std::string(to_string(p));
      if (t.tc != g.out_cols) out.push_back(where + ": Tc != C");
      if (t.tr < 1 || t.tr > g.out_rows) out.push_back(where + ": Tr out of range");
      if (t.m_on % plan.tm != 0 && t.m_on != g.out_ch)
        out.push_back(where + ": M_on not a multiple of Tm");
    }
  }
  return out;
}

FeatureLayout::FeatureLayout(LayoutKind kind, Dims4 dims, LayoutParams params)
    : kind_(kind), dims_(dims), group_(params.tm), align_(params.align) {
  require(dims.d0 >= 1 && dims.d1 >= 1 && dims.d2 >= 1 && dims.d3 >= 1, ErrorCode::OutOfRange,
          "feature dims must be positive, got " + dims.str());
  require(params.tm >= 1 && params.align >= 1, ErrorCode::InvalidPlan,
          "channel group and alignment must be >= 1");
  if (kind_ != LayoutKind::RESHAPED) {
    group_ = dims.d1;
    align_ = 1;
  }
  const std::int64_t last = groups() - 1;
  image_words_ = static_cast<std::uint64_t>((last * group_ + stored_width(last)) * dims.d2 * dims.d3);
}

std::int64_t FeatureLayout::stored_width(std::int64_t g) const noexcept {
  const std::int64_t w = group_width(g);
  if (w == group_) return w;
  return std::min(group_, round_up(w, align_));
}

std::uint64_t FeatureLayout::words() const noexcept {
  if (kind_ != LayoutKind::RESHAPED) return static_cast<std::uint64_t>(dims_.size());
  return image_words_ * static_cast<std::uint64_t>(dims_.d0);
}

std::uint64_t FeatureLayout::group_base(std::int64_t b, std::int64_t g) const noexcept {
  return static_cast<std::uint64_t>(b) * image_words_ +
         static_cast<std::uint64_t>(g * group_ * dims_.d2 * dims_.d3);
}

std::uint64_t FeatureLayout::addr(std::int64_t b, std::int64_t ch, std::int64_t r,
                                  std::int64_t c) const {
  require(b >= 0 && b < dims_.d0 && ch >= 0 && ch < dims_.d1 && r >= 0 && r < dims_.d2 &&
              c >= 0 && c < dims_.d3,
          ErrorCode::OutOfRange, "feature coordinate outside " + dims_.str());
  const auto [B, Ch, H, W] = dims_;
  switch (kind_) {
    case LayoutKind::BCHW:
      return static_cast<std::uint64_t>(((b * Ch + ch) * H + r) * W + c);
    case LayoutKind::BHWC_REUSE:
      return static_cast<std::uint64_t>(((b * H + r) * W + c) * Ch + ch);
    case LayoutKind::RESHAPED: {
      const std::int64_t g = ch / group_;
      return group_base(b, g) +
             static_cast<std::uint64_t>((r * W + c) * stored_width(g) + (ch - g * group_));
    }
  }
  return 0;
}

WeightLayout::WeightLayout(LayoutKind kind, Dims4 dims, LayoutParams params)
    : kind_(kind), dims_(dims), tm_(params.tm), tn_(params.tn) {
  require(dims.d0 >= 1 && dims.d1 >= 1 && dims.d2 >= 1 && dims.d2 == dims.d3,
          ErrorCode::OutOfRange, "weight dims must be (M, N, K, K), got " + dims.str());
  require(tm_ >= 1 && tn_ >= 1, ErrorCode::InvalidPlan, "weight tiles must be >= 1");
}

std::uint64_t WeightLayout::tile_base(std::int64_t mt, std::int64_t nt) const noexcept {
  const std::int64_t kk = dims_.d2 * dims_.d3;
  return static_cast<std::uint64_t>(mt * tm_ * dims_.d1 * kk + tile_m(mt) * nt * tn_ * kk);
}

std::uint64_t WeightLayout::addr(std::int64_t m, std::int64_t n, std::int64_t kr,
                                 std::int64_t kc) const {
  const auto [M, N, K, K2] = dims_;
  require(m >= 0 && m < M && n >= 0 && n < N && kr >= 0 && kr < K && kc >= 0 && kc < K2,
          ErrorCode::OutOfRange, "weight coordinate outside " + dims_.str());
  if (kind_ == LayoutKind::BCHW) return static_cast<std::uint64_t>(((m * N + n) * K + kr) * K + kc);
  const std::int64_t mt = m / tm_;
  const std::int64_t nt = n / tn_;
  const std::int64_t ml = m - mt * tm_;
  const std::int64_t nl = n - nt * tn_;
  const std::int64_t tmw = tile_m(mt);
  const std::int64_t tnw = tile_n(nt);
  const std::int64_t intra = kind_ == LayoutKind::RESHAPED
                                 ? ((kr * K + kc) * tnw + nl) * tmw + ml
                                 : ((ml * K + kr) * K + kc) * tnw + nl;
  return tile_base(mt, nt) + static_cast<std::uint64_t>(intra);
}

std::uint64_t feature_addr(LayoutKind kind, const Dims4& dims, const LayoutParams& params,
                           std::int64_t b, std::int64_t ch, std::int64_t r, std::int64_t c) {
  return FeatureLayout(kind, dims, params).addr(b, ch, r, c);
}

std::uint64_t weight_addr(LayoutKind kind, const Dims4& dims, const LayoutParams& params,
                          std::int64_t m, std::int64_t n, std::int64_t kr, std::int64_t kc) {
  return WeightLayout(kind, dims, params).addr(m, n, kr, kc);
}

const Region& AddressMap::add(std::string name, std::uint64_t length) {
  require(find(name) == nullptr, ErrorCode::RegionMismatch, "duplicate region '" + name + "'");
  regions_.push_back({std::move(name), next_, length});
  next_ += length;
  return regions_.back();
}

const Region* AddressMap::find(std::string_view name) const noexcept {
  for (const auto& r : regions_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const Region& AddressMap::at(std::string_view name) const {
  const Region* r = find(name);
  require(r != nullptr, ErrorCode::RegionMismatch, "no region '" + std::string(name) + "'");
  return *r;
}

DramImage::DramImage(AddressMap map)
    : map_(std::move(map)), words_(static_cast<std::size_t>(map_.total_words()), 0u) {}

namespace {

void check_region(const OperandLayout& layout, const DramImage& image, const Region& region) {
  require(region.length == layout.words(), ErrorCode::RegionMismatch,
          "region '" + region.name + "' holds " + std::to_string(region.length) +
              " words, layout needs " + std::to_string(layout.words()));
  require(region.end() <= image.words().size(), ErrorCode::RegionMismatch,
          "region '" + region.name + "' extends past the image");
}

}  // namespace

void pack(const Tensor& tensor, const OperandLayout& layout, DramImage& image,
          const Region& region) {
  check_region(layout, image, region);
  require_dims(tensor.dims(), layout.dims(), "pack");
  auto words = image.words().subspan(region.offset, region.length);
  layout.for_each_word(Box::whole(layout.dims()), [&](std::uint64_t a, const Coord4& c, bool pad) {
    words[a] = pad ? 0u : std::bit_cast<std::uint32_t>(tensor(c[0], c[1], c[2], c[3]));
  });
}

Tensor unpack(const OperandLayout& layout, const DramImage& image, const Region& region) {
  check_region(layout, image, region);
  const auto words = image.words().subspan(region.offset, region.length);
  Tensor out(layout.dims());
  layout.for_each_word(Box::whole(layout.dims()), [&](std::uint64_t a, const Coord4& c, bool pad) {
    if (!pad) out(c[0], c[1], c[2], c[3]) = std::bit_cast<float>(words[a]);
  });
  return out;
}

}  // namespace edgetrain
