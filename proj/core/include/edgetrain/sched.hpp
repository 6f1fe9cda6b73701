// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "edgetrain/layout.hpp"
#include "edgetrain/model.hpp"
#include "edgetrain/program.hpp"

namespace edgetrain {

struct ResourceUsage {
  std::int64_t d_conv = 0;
  std::int64_t b_ifm = 0;
  std::int64_t b_ofm = 0;
  std::int64_t b_wei = 0;
  std::int64_t b_conv = 0;

  friend bool operator==(const ResourceUsage&, const ResourceUsage&) = default;
};

// Banks one tile needs on each buffer, for a single buffer of the pair.
std::int64_t ifm_banks(const LayerSpec& layer, Process process, const ProcessTile& tile,
                       std::int64_t tile_channels, const DeviceSpec& dev);
std::int64_t ofm_banks(const LayerSpec& layer, Process process, const ProcessTile& tile,
                       std::int64_t tile_channels, const DeviceSpec& dev);
std::int64_t wei_banks(const LayerSpec& layer, Process process, std::int64_t m_on,
                       std::int64_t tile_channels, const DeviceSpec& dev);

// Maxima over the Conv/FC layers and their applicable processes.
ResourceUsage resource_usage(const TilePlan& plan, const ShapedNetwork& net,
                             const DeviceSpec& dev);

struct Schedule {
  TilePlan plan;
  ResourceUsage resources;
  std::vector<StartEntry> start_table;
  // Summed analytic FP + BP + WU cycles of the Conv/FC layers.
  Cycles predicted_cycles = 0;
};

// Throws Infeasible when no channel tile fits the budgets.
Schedule schedule(const ShapedNetwork& net, const DeviceSpec& dev, std::int64_t batch);

}  // namespace edgetrain
