// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

// Closed-form latency of the FP, BP and WU passes of Conv/FC layers.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "edgetrain/layout.hpp"
#include "edgetrain/model.hpp"

namespace edgetrain {

struct TileCosts {
  Cycles comp = 0;
  Cycles ifm = 0;
  Cycles wei = 0;
  Cycles out = 0;
  Cycles ofm = 0;
  Cycles load = 0;
  Cycles prod1 = 0;
  Cycles prod2 = 0;
  Cycles store = 0;
};

// Which load opens the first-image pipelines of FP and BP. Features matches
// the published per-layer cycle counts; Load takes the max with the weight
// transfer as the composition formulas are written.
enum class LeadIn { Features, Load };

struct AnalyticOptions {
  LeadIn lead_in = LeadIn::Features;
};

// block_channels sizes the BP weight transfer; zero means the full M_on block.
TileCosts tile_costs(const LayerSpec& layer, const ProcessTile& tile, std::int64_t tile_channels,
                     const DeviceSpec& dev, Process process, std::int64_t block_channels = 0);

using AuditTerms = std::vector<std::pair<std::string, Cycles>>;

struct LayerLatency {
  bool applicable = false;
  Cycles cycles = 0;
  AuditTerms audit;
};

LayerLatency fp_latency(const LayerSpec& layer, const ProcessTile& tile,
                        std::int64_t tile_channels, const DeviceSpec& dev, std::int64_t batch,
                        const AnalyticOptions& opt = {});
LayerLatency bp_latency(const LayerSpec& layer, const ProcessTile& tile,
                        std::int64_t tile_channels, const DeviceSpec& dev, std::int64_t batch,
                        bool first_conv = false, const AnalyticOptions& opt = {});
LayerLatency wu_latency(const LayerSpec& layer, const ProcessTile& tile,
                        std::int64_t tile_channels, const DeviceSpec& dev, std::int64_t batch);

LayerLatency process_latency(Process process, const LayerSpec& layer, const LayerTilePlan& tiles,
                             std::int64_t tile_channels, const DeviceSpec& dev,
                             std::int64_t batch, bool first_conv = false,
                             const AnalyticOptions& opt = {});

// MAC-array busy cycles of one process, a lower bound on its latency under any tiling.
Cycles compute_floor(const LayerSpec& layer, Process process, std::int64_t tile_channels,
                     std::int64_t batch);

namespace detail {
// The two weight-update compositions, exposed so they can be compared.
Cycles wu_streaming(const LayerSpec& layer, const ProcessTile& tile, std::int64_t tile_channels,
                    const DeviceSpec& dev, std::int64_t batch, AuditTerms* audit = nullptr);
Cycles wu_resident(const LayerSpec& layer, const ProcessTile& tile, std::int64_t tile_channels,
                   const DeviceSpec& dev, std::int64_t batch, AuditTerms* audit = nullptr);
}  // namespace detail

}  // namespace edgetrain
