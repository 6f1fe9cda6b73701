// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "edgetrain/layout.hpp"
#include "edgetrain/model.hpp"
#include "edgetrain/program.hpp"

namespace edgetrain {

struct Burst {
  std::uint64_t start = 0;
  std::uint64_t len = 0;

  friend bool operator==(const Burst&, const Burst&) = default;
};

std::vector<Burst> split_bursts(std::span<const std::uint64_t> addrs);
std::vector<Burst> split_bursts(const ChannelTrace& trace);

struct TransferCost {
  std::uint64_t bursts = 0;
  std::uint64_t words = 0;
  Cycles cycles = 0;
};

TransferCost transfer_cost(std::span<const Burst> bursts, const DeviceSpec& dev);
// One restart penalty per burst plus streaming at p words per cycle.
Cycles transfer_cycles(std::span<const Burst> bursts, const DeviceSpec& dev);

struct ChannelStats {
  std::uint64_t words = 0;
  std::uint64_t restarts = 0;
  Cycles busy = 0;
  // Burst length -> count, over maximal runs of the whole program.
  std::map<std::uint64_t, std::uint64_t> burst_hist;
};

struct SimResult {
  Process process = Process::FP;
  bool applicable = false;
  Cycles cycles = 0;
  Cycles compute = 0;
  std::array<ChannelStats, 4> channels;

  [[nodiscard]] std::uint64_t restarts() const noexcept;
  [[nodiscard]] const ChannelStats& channel(Channel ch) const noexcept {
    return channels[static_cast<std::size_t>(ch)];
  }
};

SimResult simulate_program(const LayerProgram& program, const DeviceSpec& dev);

// Partial channel groups are stored padded to the stream width.
SimResult simulate_layer(Process process, const LayerSpec& layer, const LayerTilePlan& tiles,
                         std::int64_t tile_channels, LayoutKind kind, const DeviceSpec& dev,
                         std::int64_t batch, bool first_conv = false);

}  // namespace edgetrain
