// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "edgetrain/errors.hpp"
#include "edgetrain/perf.hpp"
#include "support.hpp"

namespace edgetrain {
namespace {

class AlexNetModel : public ::testing::Test {
 protected:
  ShapedNetwork net = testing::alexnet_conv();
  TilePlan plan = testing::published_plan(net);
  DeviceSpec dev;

  LayerLatency latency(std::size_t i, Process p, std::int64_t batch = 4) const {
    return process_latency(p, net.layer(i), plan.layers[i], plan.tm, dev, batch,
                           net.first_conv_like() == i);
  }
};

TEST_F(AlexNetModel, ReproducesPublishedLayerCycles) {
  Cycles total = 0;
  for (const auto& row : testing::kPublishedCycles) {
    const std::size_t i = testing::layer_index(net, row.name);
    EXPECT_EQ(latency(i, Process::FP).cycles, row.fp) << row.name;
    EXPECT_EQ(latency(i, Process::WU).cycles, row.wu) << row.name;
    const LayerLatency bp = latency(i, Process::BP);
    EXPECT_EQ(bp.applicable, row.bp != 0) << row.name;
    EXPECT_EQ(bp.cycles, row.bp) << row.name;
    for (Process p : kProcesses) total += latency(i, p).cycles;
  }
  EXPECT_EQ(total, testing::kPublishedTotal);
}

TEST_F(AlexNetModel, ForwardLatencyIsAtLeastTheComputeBound) {
  for (const auto& row : testing::kPublishedCycles) {
    const std::size_t i = testing::layer_index(net, row.name);
    const LayerSpec& l = net.layer(i);
    const ProcessTile& t = plan.layers[i].fp;
    const Cycles bound = 4 * ceil_div(l.M, plan.tm) * ceil_div(l.N, plan.tn) * ceil_div(l.R, t.tr) *
                         t.tr * t.tc * l.K * l.K;
    EXPECT_GE(latency(i, Process::FP).cycles, bound) << row.name;
  }
}

TEST_F(AlexNetModel, LatencyIsNondecreasingInBatch) {
  for (const auto& row : testing::kPublishedCycles) {
    const std::size_t i = testing::layer_index(net, row.name);
    for (Process p : kProcesses) {
      Cycles prev = 0;
      for (std::int64_t b = 1; b <= 8; ++b) {
        const Cycles c = latency(i, p, b).cycles;
        ASSERT_GE(c, prev) << row.name << ' ' << to_string(p) << " B=" << b;
        prev = c;
      }
    }
  }
}

TEST_F(AlexNetModel, AuditTermsAreReported) {
  const LayerLatency fp = latency(testing::layer_index(net, "conv2"), Process::FP);
  ASSERT_FALSE(fp.audit.empty());
  bool has_comp = false;
  for (const auto& [term, value] : fp.audit) has_comp |= term == "block0.t_comp" && value == 27 * 27 * 25;
  EXPECT_TRUE(has_comp);
}

TEST(WeightUpdate, BranchesAgreeWhenOneRowTileHoldsTheMap) {
  const DeviceSpec dev;
  std::mt19937_64 rng(301);
  for (int trial = 0; trial < 50; ++trial) {
    // One channel tile each way, so both branches make a single sweep.
    const LayerSpec l = testing::random_conv(rng, 16, 9);
    const ProcessTile t{l.R, l.C, l.M};
    for (std::int64_t batch : {1, 3, 8}) {
      ASSERT_EQ(detail::wu_resident(l, t, 16, dev, batch), detail::wu_streaming(l, t, 16, dev, batch))
          << "trial " << trial;
    }
  }
}

TEST(WeightUpdate, ResidentBranchIsChosenOnlyWhenTheMapFits) {
  const ShapedNetwork net = testing::alexnet_conv();
  const DeviceSpec dev;
  const LayerSpec& l = net.layer(testing::layer_index(net, "conv3"));
  EXPECT_EQ(wu_latency(l, {13, 13, 112}, 16, dev, 4).cycles, detail::wu_resident(l, {13, 13, 112}, 16, dev, 4));
  EXPECT_EQ(wu_latency(l, {6, 13, 112}, 16, dev, 4).cycles, detail::wu_streaming(l, {6, 13, 112}, 16, dev, 4));
}

TEST(TileCosts, RejectMalformedLayers) {
  LayerSpec l = make_conv(4, 4, 4, 4, 0, 1, 0, "bad");
  l.R_in = l.C_in = 4;
  EXPECT_THROW((void)tile_costs(l, {1, 4, 4}, 4, DeviceSpec{}, Process::FP), Error);
}

TEST(TileCosts, MatchTheClosedForms) {
  const ShapedNetwork net = testing::alexnet_conv();
  const LayerSpec& l = net.layer(testing::layer_index(net, "conv2"));
  const TileCosts c = tile_costs(l, {27, 27, 112}, 16, DeviceSpec{}, Process::FP);
  EXPECT_EQ(c.comp, 27 * 27 * 25);
  EXPECT_EQ(c.ifm, 400 + 4 * 31 * 31);
  EXPECT_EQ(c.wei, 64 * 25);
  EXPECT_EQ(c.out, 4 * 27 * 27);
}

TEST(ComputeFloor, BoundsEveryTiling) {
  std::mt19937_64 rng(71);
  const DeviceSpec dev;
  for (int trial = 0; trial < 300; ++trial) {
    LayerSpec l = testing::random_conv(rng, 40, 12);
    const std::int64_t T = std::uniform_int_distribution<std::int64_t>(1, 17)(rng);
    const std::int64_t batch = std::uniform_int_distribution<std::int64_t>(1, 4)(rng);
    for (Process p : kProcesses) {
      const ProcessGeometry g = process_geometry(l, p);
      const ProcessTile t{std::uniform_int_distribution<std::int64_t>(1, g.out_rows)(rng),
                          std::uniform_int_distribution<std::int64_t>(1, g.out_cols)(rng),
                          std::uniform_int_distribution<std::int64_t>(1, g.out_ch)(rng)};
      LayerTilePlan lp = default_layer_plan(l);
      lp.at(p) = t;
      ASSERT_LE(compute_floor(l, p, T, batch), process_latency(p, l, lp, T, dev, batch).cycles)
          << "trial " << trial << ' ' << to_string(p);
    }
  }
}

}  // namespace
}  // namespace edgetrain
