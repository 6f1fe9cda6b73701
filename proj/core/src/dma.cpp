// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/dma.hpp"

#include <algorithm>
#include <limits>

namespace edgetrain {

std::vector<Burst> split_bursts(std::span<const std::uint64_t> addrs) {
  require(!addrs.empty(), ErrorCode::EmptyTrace, "cannot split an empty trace");
  std::vector<Burst> out;
  Burst cur{addrs[0], 1};
  for (std::size_t i = 1; i < addrs.size(); ++i) {
    if (addrs[i] == cur.start + cur.len) {
      ++cur.len;
      continue;
    }
    out.push_back(cur);
    cur = {addrs[i], 1};
  }
  out.push_back(cur);
  return out;
}

std::vector<Burst> split_bursts(const ChannelTrace& trace) { return split_bursts(trace.addrs); }

TransferCost transfer_cost(std::span<const Burst> bursts, const DeviceSpec& dev) {
  TransferCost cost;
  for (const Burst& b : bursts) {
    ++cost.bursts;
    cost.words += b.len;
    cost.cycles += dev.t_start + ceil_div(static_cast<std::int64_t>(b.len), dev.stream_width_words);
  }
  return cost;
}

Cycles transfer_cycles(std::span<const Burst> bursts, const DeviceSpec& dev) {
  return transfer_cost(bursts, dev).cycles;
}

std::uint64_t SimResult::restarts() const noexcept {
  std::uint64_t n = 0;
  for (const auto& c : channels) n += c.restarts;
  return n;
}

namespace {

constexpr std::uint64_t kNoAddress = std::numeric_limits<std::uint64_t>::max();

// A DMA channel that restarts whenever a request does not continue the
// previous address.
class Stream {
 public:
  Stream(ChannelStats& stats, const DeviceSpec& dev) : stats_(stats), dev_(dev) {}

  Cycles charge(const Operand& op, const Box& box) {
    Cycles cycles = 0;
    std::int64_t piece = 0;
    op.layout.for_each_run(box, [&](std::uint64_t start, std::uint64_t len) {
      const std::uint64_t addr = op.base + start;
      if (addr != next_) {
        cycles += ceil_div(piece, dev_.stream_width_words);
        piece = 0;
        cycles += dev_.t_start;
        ++stats_.restarts;
        close();
      }
      piece += static_cast<std::int64_t>(len);
      burst_ += len;
      next_ = addr + len;
      stats_.words += len;
    });
    cycles += ceil_div(piece, dev_.stream_width_words);
    stats_.busy += cycles;
    return cycles;
  }

  void close() {
    if (burst_ > 0) ++stats_.burst_hist[burst_];
    burst_ = 0;
  }

 private:
  ChannelStats& stats_;
  const DeviceSpec& dev_;
  std::uint64_t next_ = kNoAddress;
  std::uint64_t burst_ = 0;
};

}  // namespace

SimResult simulate_program(const LayerProgram& program, const DeviceSpec& dev) {
  SimResult res;
  res.process = program.process;
  res.applicable = program.applicable;
  if (!program.applicable) return res;
  std::array<Stream, 4> streams{Stream(res.channels[0], dev), Stream(res.channels[1], dev),
                                Stream(res.channels[2], dev), Stream(res.channels[3], dev)};
  // Channels run in parallel, so a phase costs its slowest channel.
  auto phase = [&](const std::vector<Transfer>& transfers) {
    std::array<Cycles, 4> per{};
    for (const Transfer& t : transfers) {
      per[static_cast<std::size_t>(t.channel)] +=
          streams[static_cast<std::size_t>(t.channel)].charge(program.operands[t.operand], t.box);
    }
    return *std::max_element(per.begin(), per.end());
  };

  for (const Segment& seg : program.segments) {
    Cycles prev_store = 0;
    for (std::size_t j = 0; j < seg.tiles.size(); ++j) {
      const TileRun& tile = seg.tiles[j];
      require(!tile.steps.empty(), ErrorCode::InvariantViolation, "tile without steps");
      Cycles t = phase(tile.steps[0].loads);
      for (std::size_t k = 1; k < tile.steps.size(); ++k) {
        const Cycles load = phase(tile.steps[k].loads);
        t += std::max(load, tile.steps[k - 1].compute) + phase(tile.steps[k - 1].serial);
      }
      const Step& last = tile.steps.back();
      t += j == 0 ? last.compute : std::max(last.compute, prev_store);
      t += phase(last.serial);
      for (const Step& st : tile.steps) res.compute += st.compute;
      prev_store = phase(tile.stores);
      res.cycles += t;
    }
    res.cycles += prev_store;
  }
  for (auto& s : streams) s.close();
  return res;
}

SimResult simulate_layer(Process process, const LayerSpec& layer, const LayerTilePlan& tiles,
                         std::int64_t tile_channels, LayoutKind kind, const DeviceSpec& dev,
                         std::int64_t batch, bool first_conv) {
  const ProgramOptions opt{kind, {tile_channels, tile_channels, dev.stream_width_words}, batch,
                           first_conv};
  return simulate_program(build_program(process, layer, tiles, opt), dev);
}

}  // namespace edgetrain
