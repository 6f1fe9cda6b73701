// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/perf.hpp"

#include <algorithm>

namespace edgetrain {

namespace {

std::vector<std::int64_t> block_sizes(std::int64_t channels, std::int64_t block) {
  std::vector<std::int64_t> out;
  for (std::int64_t lo = 0; lo < channels; lo += block) out.push_back(std::min(block, channels - lo));
  return out;
}

void note(AuditTerms* audit, const std::string& key, Cycles v) {
  if (audit != nullptr) audit->emplace_back(key, v);
}

void note_costs(AuditTerms* audit, const std::string& prefix, const TileCosts& c) {
  if (audit == nullptr) return;
  note(audit, prefix + "t_comp", c.comp);
  note(audit, prefix + "t_ifm", c.ifm);
  note(audit, prefix + "t_wei", c.wei);
  note(audit, prefix + "t_out", c.out);
  note(audit, prefix + "t_ofm", c.ofm);
  note(audit, prefix + "t_load", c.load);
  note(audit, prefix + "t_prod1", c.prod1);
  note(audit, prefix + "t_prod2", c.prod2);
  note(audit, prefix + "t_store", c.store);
}

void check_layer(const LayerSpec& l, const ProcessTile& t, std::int64_t tile_channels,
                 Process p) {
  require(l.conv_like(), ErrorCode::InvalidPlan, "analytic latency covers Conv/FC layers only");
  require(l.K >= 1 && l.S >= 1, ErrorCode::InvalidPlan, "kernel and stride must be >= 1");
  validate_tile(l, p, t, tile_channels);
}

// Latency of one FP/BP channel block: the first image loads weights.
struct BlockTimes {
  Cycles first_image = 0;
  Cycles other_image = 0;
};

BlockTimes forward_like_block(const TileCosts& c, std::int64_t inner_steps, std::int64_t tiles,
                              Cycles lead, bool bp, const DeviceSpec& dev,
                              std::int64_t m_tiles, std::int64_t row_tiles, AuditTerms* audit,
                              const std::string& prefix) {
  const Cycles lat1 = inner_steps * c.prod1 + c.ifm + c.comp;
  const Cycles lat2 = inner_steps * c.prod1 + c.ifm + c.store;
  const Cycles latb1 = inner_steps * c.prod2 + lead + c.comp;
  const Cycles latb2 = inner_steps * c.prod2 + lead + c.store;
  const Cycles lat3 = (tiles - 1) * lat2 + lat1 + c.out + dev.t_start;
  const Cycles latb3 = bp ? (tiles - 1) * lat2 + latb1 + c.out + dev.t_start
                          : m_tiles * (row_tiles - 1) * lat2 + (m_tiles - 1) * latb2 + latb1 +
                                c.out + dev.t_start;
  note(audit, prefix + "lat1", lat1);
  note(audit, prefix + "lat2", lat2);
  note(audit, prefix + "latb1", latb1);
  note(audit, prefix + "latb2", latb2);
  note(audit, prefix + "lat3", lat3);
  note(audit, prefix + "latb3", latb3);
  return {latb3, lat3};
}

Cycles forward_like(const LayerSpec& l, const ProcessTile& t, std::int64_t tile_channels,
                    const DeviceSpec& dev, std::int64_t batch, Process p,
                    const AnalyticOptions& opt, AuditTerms* audit) {
  const ProcessGeometry g = process_geometry(l, p);
  const std::int64_t inner_steps = ceil_div(g.in_ch, tile_channels) - 1;
  const std::int64_t row_tiles = ceil_div(g.out_rows, t.tr) * ceil_div(g.out_cols, t.tc);
  Cycles total = 0;
  std::size_t index = 0;
  for (std::int64_t block : block_sizes(g.out_ch, t.m_on)) {
    const TileCosts c = tile_costs(l, t, tile_channels, dev, p, block);
    const std::string prefix = "block" + std::to_string(index++) + ".";
    note_costs(audit, prefix, c);
    const std::int64_t m_tiles = ceil_div(block, tile_channels);
    const Cycles lead = opt.lead_in == LeadIn::Features ? c.ifm : c.load;
    const BlockTimes bt = forward_like_block(c, inner_steps, m_tiles * row_tiles, lead,
                                             p == Process::BP, dev, m_tiles, row_tiles, audit,
                                             prefix);
    const Cycles lat = (batch - 1) * bt.other_image + bt.first_image;
    note(audit, prefix + "lat", lat);
    total += lat;
  }
  return total;
}

}  // namespace

TileCosts tile_costs(const LayerSpec& l, const ProcessTile& t, std::int64_t tile_channels,
                     const DeviceSpec& dev, Process p, std::int64_t block_channels) {
  require(l.K >= 1, ErrorCode::InvalidPlan, "kernel size must be >= 1");
  require(l.S >= 1, ErrorCode::InvalidPlan, "stride must be >= 1");
  require(tile_channels >= 1 && t.tr >= 1 && t.tc >= 1 && t.m_on >= 1, ErrorCode::InvalidPlan,
          "tile sizes must be >= 1");
  const ProcessGeometry g = process_geometry(l, p);
  const std::int64_t T = tile_channels;
  const std::int64_t pw = dev.stream_width_words;
  const std::int64_t kk = l.K * l.K;
  const std::int64_t in_rows = (t.tr - 1) * l.S + l.K;
  const std::int64_t in_cols = (t.tc - 1) * l.S + l.K;
  const std::int64_t block = block_channels > 0 ? block_channels : t.m_on;

  TileCosts c;
  c.comp = t.tr * t.tc * kk;
  c.ifm = dev.t_start + ceil_div(std::min(g.in_ch, T), pw) * in_rows * in_cols;
  c.wei = ceil_div(T * T, pw) * kk;
  c.out = ceil_div(std::min(g.out_ch, T), pw) * t.tr * t.tc;
  c.ofm = 0;
  switch (p) {
    case Process::FP:
      c.load = std::max(c.ifm, c.wei);
      c.prod1 = std::max(c.ifm, c.comp);
      c.prod2 = std::max(c.load, c.comp);
      c.store = std::max(c.comp, c.out);
      break;
    case Process::BP:
      // Weights of a block are not contiguous with the next block's.
      c.wei = ceil_div(block * T, pw) * kk + dev.t_start;
      c.load = std::max(c.ifm, c.wei);
      c.prod1 = std::max(c.ifm, c.comp);
      c.prod2 = std::max(c.load, c.comp);
      c.store = std::max(c.comp, c.out);
      break;
    case Process::WU:
      c.ofm = dev.t_start + t.tr * t.tc * ceil_div(std::min(g.out_ch, T), pw);
      c.out = c.wei;
      c.load = std::max(c.ifm, c.ofm);
      c.prod1 = std::max(c.load, c.comp);
      c.prod2 = std::max(c.ifm, c.comp);
      c.store = std::max(c.comp, c.out);
      break;
  }
  return c;
}

LayerLatency fp_latency(const LayerSpec& l, const ProcessTile& t, std::int64_t tile_channels,
                        const DeviceSpec& dev, std::int64_t batch, const AnalyticOptions& opt) {
  check_layer(l, t, tile_channels, Process::FP);
  LayerLatency res{true, 0, {}};
  res.cycles = forward_like(l, t, tile_channels, dev, batch, Process::FP, opt, &res.audit);
  return res;
}

LayerLatency bp_latency(const LayerSpec& l, const ProcessTile& t, std::int64_t tile_channels,
                        const DeviceSpec& dev, std::int64_t batch, bool first_conv,
                        const AnalyticOptions& opt) {
  if (first_conv) return {};
  check_layer(l, t, tile_channels, Process::BP);
  LayerLatency res{true, 0, {}};
  res.cycles = forward_like(l, t, tile_channels, dev, batch, Process::BP, opt, &res.audit);
  return res;
}

namespace detail {

Cycles wu_streaming(const LayerSpec& l, const ProcessTile& t, std::int64_t tile_channels,
                    const DeviceSpec& dev, std::int64_t batch, AuditTerms* audit) {
  const TileCosts c = tile_costs(l, t, tile_channels, dev, Process::WU);
  note_costs(audit, "", c);
  const std::int64_t row_tiles = ceil_div(l.R, t.tr) * ceil_div(l.C, t.tc);
  const std::int64_t n_tiles = ceil_div(l.N, tile_channels);
  const Cycles lat1 = (row_tiles - 1) * c.prod1 + c.load + c.comp;
  const Cycles latb1 = (row_tiles - 1) * c.prod1 + c.load + c.store;
  note(audit, "lat1", lat1);
  note(audit, "latb1", latb1);
  Cycles total = 0;
  for (std::int64_t block : block_sizes(l.M, t.m_on)) {
    const std::int64_t sweeps = ceil_div(block, tile_channels) * n_tiles;
    total += ((batch - 1) * sweeps + 1) * lat1 + (sweeps - 1) * latb1 + c.out;
  }
  return total;
}

Cycles wu_resident(const LayerSpec& l, const ProcessTile& t, std::int64_t tile_channels,
                   const DeviceSpec& dev, std::int64_t batch, AuditTerms* audit) {
  const TileCosts c = tile_costs(l, t, tile_channels, dev, Process::WU);
  note_costs(audit, "", c);
  const std::int64_t n_tiles = ceil_div(l.N, tile_channels);
  const Cycles lat1 = (n_tiles - 1) * c.prod2 + c.load + c.comp;
  const Cycles latb1 = (n_tiles - 1) * (c.prod2 + c.out) + c.load + c.comp + c.out;
  note(audit, "lat1", lat1);
  note(audit, "latb1", latb1);
  Cycles total = 0;
  for (std::int64_t block : block_sizes(l.M, t.m_on)) {
    total += ceil_div(block, tile_channels) * ((batch - 1) * lat1 + latb1);
  }
  return total;
}

}  // namespace detail

LayerLatency wu_latency(const LayerSpec& l, const ProcessTile& t, std::int64_t tile_channels,
                        const DeviceSpec& dev, std::int64_t batch) {
  check_layer(l, t, tile_channels, Process::WU);
  LayerLatency res{true, 0, {}};
  const bool resident = l.R <= t.tr && l.C <= t.tc;
  res.cycles = resident ? detail::wu_resident(l, t, tile_channels, dev, batch, &res.audit)
                        : detail::wu_streaming(l, t, tile_channels, dev, batch, &res.audit);
  return res;
}

Cycles compute_floor(const LayerSpec& l, Process p, std::int64_t tile_channels,
                     std::int64_t batch) {
  if (!l.conv_like()) return 0;
  const ProcessGeometry g = process_geometry(l, p);
  return batch * ceil_div(g.out_ch, tile_channels) * ceil_div(g.in_ch, tile_channels) *
         g.out_rows * g.out_cols * l.K * l.K;
}

LayerLatency process_latency(Process p, const LayerSpec& l, const LayerTilePlan& tiles,
                             std::int64_t tile_channels, const DeviceSpec& dev,
                             std::int64_t batch, bool first_conv, const AnalyticOptions& opt) {
  if (!l.conv_like()) return {};
  switch (p) {
    case Process::FP: return fp_latency(l, tiles.fp, tile_channels, dev, batch, opt);
    case Process::BP: return bp_latency(l, tiles.bp, tile_channels, dev, batch, first_conv, opt);
    case Process::WU: return wu_latency(l, tiles.wu, tile_channels, dev, batch);
  }
  return {};
}

}  // namespace edgetrain
