// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "edgetrain/dma.hpp"
#include "edgetrain/errors.hpp"
#include "edgetrain/perf.hpp"
#include "edgetrain/sched.hpp"
#include "support.hpp"

namespace edgetrain {
namespace {

std::vector<std::uint64_t> random_trace(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 40);
  std::uniform_int_distribution<int> jump(0, 3);
  std::vector<std::uint64_t> t;
  std::uint64_t a = 100;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    t.push_back(a);
    a = jump(rng) == 0 ? a + 7 : a + 1;
  }
  return t;
}

TEST(Bursts, SplitIsMaximalAndCoversTheTrace) {
  std::mt19937_64 rng(201);
  for (int trial = 0; trial < 200; ++trial) {
    const auto trace = random_trace(rng);
    const auto bursts = split_bursts(trace);
    std::uint64_t total = 0;
    std::size_t pos = 0;
    for (const Burst& b : bursts) {
      for (std::uint64_t k = 0; k < b.len; ++k) ASSERT_EQ(trace[pos++], b.start + k);
      total += b.len;
    }
    ASSERT_EQ(total, trace.size());
    for (std::size_t i = 1; i < bursts.size(); ++i)
      ASSERT_NE(bursts[i - 1].start + bursts[i - 1].len, bursts[i].start);
  }
}

TEST(Bursts, EmptyTraceIsAnError) {
  try {
    (void)split_bursts(std::vector<std::uint64_t>{});
    FAIL() << "expected EmptyTrace";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyTrace);
  }
}

TEST(Bursts, CostIsRestartPlusStreaming) {
  const DeviceSpec dev;
  const std::vector<Burst> one{{0, 9}};
  EXPECT_EQ(transfer_cycles(one, dev), 400 + 3);
  const std::vector<Burst> two{{0, 4}, {10, 5}};
  EXPECT_EQ(transfer_cycles(two, dev), 2 * 400 + 1 + 2);
}

TEST(Bursts, AddingABurstCostsMoreAndMergingCostsLess) {
  const DeviceSpec dev;
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::uint64_t> len(1, 64);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Burst> bursts{{0, len(rng)}, {1000, len(rng)}};
    const Cycles base = transfer_cycles(bursts, dev);
    auto more = bursts;
    more.push_back({5000, len(rng)});
    ASSERT_GT(transfer_cycles(more, dev), base);
    const std::vector<Burst> merged{{0, bursts[0].len + bursts[1].len}};
    ASSERT_LT(transfer_cycles(merged, dev), base);
  }
}

class AlexNetSim : public ::testing::Test {
 protected:
  ShapedNetwork net = testing::alexnet_conv();
  TilePlan plan = testing::published_plan(net);
  DeviceSpec dev;

  SimResult sim(std::size_t i, Process p, LayoutKind kind) const {
    return simulate_layer(p, net.layer(i), plan.layers[i], plan.tm, kind, dev, 4,
                          net.first_conv_like() == i);
  }
};

TEST_F(AlexNetSim, SimulationTracksTheAnalyticModel) {
  for (const auto& row : testing::kPublishedCycles) {
    const std::size_t i = testing::layer_index(net, row.name);
    for (Process p : kProcesses) {
      const SimResult s = sim(i, p, LayoutKind::RESHAPED);
      const LayerLatency a = process_latency(p, net.layer(i), plan.layers[i], plan.tm, dev, 4,
                                             net.first_conv_like() == i);
      ASSERT_EQ(s.applicable, a.applicable);
      if (!a.applicable) continue;
      const double dev_pct = std::abs(static_cast<double>(s.cycles - a.cycles)) / static_cast<double>(a.cycles);
      EXPECT_LE(dev_pct, 0.05) << row.name << ' ' << to_string(p);
    }
  }
}

TEST_F(AlexNetSim, ChannelCostsAreIndependent) {
  const SimResult s = sim(2, Process::FP, LayoutKind::RESHAPED);
  Cycles busiest = 0;
  for (Channel ch : kChannels) busiest = std::max(busiest, s.channel(ch).busy);
  EXPECT_GE(s.cycles, busiest);
  EXPECT_GE(s.cycles, s.compute);
}

TEST_F(AlexNetSim, ReshapedWeightsStreamAsOneRunPerLayer) {
  for (const auto& row : testing::kPublishedCycles) {
    const std::size_t i = testing::layer_index(net, row.name);
    const SimResult s = sim(i, Process::FP, LayoutKind::RESHAPED);
    const auto& hist = s.channel(Channel::WEI).burst_hist;
    ASSERT_EQ(hist.size(), 1U) << row.name;
    EXPECT_EQ(hist.begin()->first, static_cast<std::uint64_t>(weight_dims(net.layer(i)).size()));
  }
}

TEST_F(AlexNetSim, ReshapedOutputsStreamBlocksOfWholeMaps) {
  for (const auto& row : testing::kPublishedCycles) {
    const std::size_t i = testing::layer_index(net, row.name);
    const LayerSpec& l = net.layer(i);
    const SimResult s = sim(i, Process::FP, LayoutKind::RESHAPED);
    const auto m_on = plan.layers[i].fp.m_on;
    const auto plane = static_cast<std::uint64_t>(l.R * l.C);
    const auto& hist = s.channel(Channel::OUT).burst_hist;
    ASSERT_FALSE(hist.empty());
    if (m_on == l.M) {
      // Whole images are contiguous, so consecutive images merge.
      for (const auto& entry : hist) EXPECT_EQ(entry.first % (static_cast<std::uint64_t>(l.M) * plane), 0U) << row.name;
      continue;
    }
    for (const auto& [len, count] : hist) {
      EXPECT_EQ(len % plane, 0U) << row.name;
      EXPECT_LE(len, static_cast<std::uint64_t>(m_on) * plane) << row.name;
    }
    EXPECT_TRUE(hist.count(static_cast<std::uint64_t>(m_on) * plane)) << row.name;
  }
}

TEST_F(AlexNetSim, BchwReadsRunsOfTileColumns) {
  for (const auto& row : testing::kPublishedCycles) {
    const std::size_t i = testing::layer_index(net, row.name);
    const SimResult s = sim(i, Process::FP, LayoutKind::BCHW);
    const auto tc = static_cast<std::uint64_t>(plan.layers[i].fp.tc);
    const auto& out = s.channel(Channel::OUT).burst_hist;
    ASSERT_FALSE(out.empty());
    // Full-width rows of consecutive output rows merge into longer runs.
    for (const auto& entry : out) EXPECT_EQ(entry.first % tc, 0U) << row.name;
  }
}

TEST(LayoutOrdering, ReshapedBeatsBchwOnEveryConvLayer) {
  const DeviceSpec dev;
  for (const char* name : {"alexnet_conv", "cnn1x"}) {
    const ShapedNetwork net = testing::preset_net(name, 4);
    const TilePlan plan = std::string(name) == "alexnet_conv" ? testing::published_plan(net)
                                                                : schedule(net, dev, 4).plan;
    const auto first = net.first_conv_like();
    for (std::size_t i = 0; i < net.size(); ++i) {
      const LayerSpec& l = net.layer(i);
      if (l.kind != LayerKind::Conv) continue;
      Cycles reshaped = 0;
      Cycles bchw = 0;
      std::uint64_t r_restarts = 0;
      std::uint64_t b_restarts = 0;
      for (Process p : kProcesses) {
        const SimResult r = simulate_layer(p, l, plan.layers[i], plan.tm, LayoutKind::RESHAPED, dev, 4, first == i);
        const SimResult b = simulate_layer(p, l, plan.layers[i], plan.tm, LayoutKind::BCHW, dev, 4, first == i);
        reshaped += r.cycles;
        bchw += b.cycles;
        r_restarts += r.restarts();
        b_restarts += b.restarts();
      }
      EXPECT_LT(reshaped, bchw) << name << ' ' << l.name;
      EXPECT_GT(b_restarts, r_restarts) << name << ' ' << l.name;
    }
  }
}

}  // namespace
}  // namespace edgetrain
