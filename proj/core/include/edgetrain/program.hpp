// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

// Loop programs: the DMA transfer schedule of one process of one layer under
// one layout. A program is a sequence of segments that run back to back; each
// segment is a pipeline of tiles, and each tile loops over input-channel (or
// row) steps that double-buffer their loads against the previous compute.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgetrain/layout.hpp"
#include "edgetrain/model.hpp"

namespace edgetrain {

struct Operand {
  std::string region;
  OperandLayout layout;
  std::uint64_t base = 0;
};

struct Transfer {
  Channel channel = Channel::IFM;
  std::uint32_t operand = 0;
  Box box;
};

struct Step {
  std::vector<Transfer> loads;
  Cycles compute = 0;
  // Transfers that block the pipeline right after this step's compute.
  std::vector<Transfer> serial;
};

struct TileRun {
  std::vector<Step> steps;
  // Written back while the next tile runs.
  std::vector<Transfer> stores;
};

struct Segment {
  std::vector<TileRun> tiles;
};

struct LayerProgram {
  Process process = Process::FP;
  LayoutKind kind = LayoutKind::RESHAPED;
  bool applicable = false;
  std::vector<Operand> operands;
  std::vector<Segment> segments;

  template <typename F>
  void for_each_transfer(F&& f) const {
    for (const auto& seg : segments)
      for (const auto& tile : seg.tiles) {
        for (const auto& step : tile.steps) {
          for (const auto& t : step.loads) f(t);
          for (const auto& t : step.serial) f(t);
        }
        for (const auto& t : tile.stores) f(t);
      }
  }
};

struct ProgramOptions {
  LayoutKind kind = LayoutKind::RESHAPED;
  LayoutParams params;
  std::int64_t batch = 1;
  // The layer is the network's first Conv/FC layer.
  bool first_conv = false;
};

// Regions of a standalone program are laid out back to back from word 0.
LayerProgram build_program(Process process, const LayerSpec& layer, const LayerTilePlan& tiles,
                           const ProgramOptions& options);

// Input rows [lo, hi) a process reads to produce output rows [r0, r1).
std::pair<std::int64_t, std::int64_t> input_window(const LayerSpec& layer, Process process,
                                                   std::int64_t r0, std::int64_t r1,
                                                   bool rows = true);

struct ChannelTrace {
  Channel channel = Channel::IFM;
  std::vector<std::uint64_t> addrs;
};

// One trace per channel the program touches, in channel order.
std::vector<ChannelTrace> trace_program(const LayerProgram& program);
std::vector<ChannelTrace> trace_layer(Process process, const LayerSpec& layer,
                                      const LayerTilePlan& tiles, const ProgramOptions& options);

// Region names used inside a network image.
std::string network_region(const std::string& local, std::size_t layer_index);

struct NetworkLayout {
  AddressMap map;
  // programs[i][p] for layer i and process p; inapplicable ones are empty.
  std::vector<std::array<LayerProgram, 3>> programs;
};

// Builds every applicable program of the network against one shared image.
NetworkLayout build_network_layout(const ShapedNetwork& net, const TilePlan& plan,
                                   LayoutKind kind, std::int64_t align = 1);

struct StartEntry {
  std::size_t layer = 0;
  std::string layer_name;
  Process process = Process::FP;
  Channel channel = Channel::IFM;
  std::string region;
  // Region base and the first word the channel reads or writes.
  std::uint64_t region_offset = 0;
  std::uint64_t first_word = 0;

  friend bool operator==(const StartEntry&, const StartEntry&) = default;
};

std::vector<StartEntry> dma_start_table(const ShapedNetwork& net, const TilePlan& plan,
                                        LayoutKind kind, std::int64_t align = 1);

struct ReadCheck {
  bool ok = true;
  std::int64_t tiles = 0;
  std::int64_t mismatches = 0;
  std::string report;
};

// Replays every load of the program against the image, assembling each tile
// in canonical order and comparing it with the tensors the image was packed
// from. tensors[i] belongs to program.operands[i]; null entries are skipped.
// When rebuilt is non-null, loaded elements are scattered into it as well.
ReadCheck verify_program_reads(const LayerProgram& program, const DramImage& image,
                               const std::vector<const Tensor*>& tensors,
                               std::vector<Tensor>* rebuilt = nullptr);

// Packs the same random operands under both layouts and checks that every
// tile either program loads matches the canonical data, and that both
// programs reconstruct identical operand tensors.
ReadCheck equivalence_check(const LayerSpec& layer, const LayerTilePlan& tiles,
                            const LayoutParams& params, LayoutKind a, LayoutKind b,
                            Process process, std::int64_t batch, std::uint64_t seed = 1);

}  // namespace edgetrain
