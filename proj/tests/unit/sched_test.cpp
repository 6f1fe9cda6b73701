// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "edgetrain/errors.hpp"
#include "edgetrain/perf.hpp"
#include "edgetrain/sched.hpp"
#include "support.hpp"

namespace edgetrain {
namespace {

Cycles analytic_total(const ShapedNetwork& net, const TilePlan& plan, const DeviceSpec& dev,
                      std::int64_t batch) {
  Cycles total = 0;
  const auto first = net.first_conv_like();
  for (std::size_t i = 0; i < net.size(); ++i)
    for (Process p : kProcesses)
      total += process_latency(p, net.layer(i), plan.layers[i], plan.tm, dev, batch, first == i).cycles;
  return total;
}

TEST(Resources, DspCountFollowsTheChannelTile) {
  const ShapedNetwork net = testing::alexnet_conv();
  EXPECT_EQ(resource_usage(testing::published_plan(net), net, DeviceSpec{}).d_conv, 1280);
}

TEST(Resources, PublishedPlansUse672Banks) {
  const ShapedNetwork net = testing::alexnet_conv();
  const ResourceUsage u = resource_usage(testing::published_plan(net), net, load_device("zcu102"));
  EXPECT_EQ(u.b_conv, 672);
  EXPECT_EQ(u.b_conv, 2 * (u.b_ifm + u.b_ofm + u.b_wei));
}

TEST(Resources, UnitLayerNeedsOneBankPerBuffer) {
  NetworkSpec spec;
  spec.layers = {make_conv(1, 1, 1, 1, 1, 1, 0, "c")};
  const ShapedNetwork net = validate_and_infer(spec);
  DeviceSpec dev;
  dev.bram_usable_bits = dev.bram_bits;
  const ResourceUsage u = resource_usage(default_plan(net, 1), net, dev);
  EXPECT_EQ(u.b_ifm, 1);
  EXPECT_EQ(u.b_ofm, 1);
  EXPECT_EQ(u.d_conv, 5);
}

TEST(Resources, RejectIncompletePlans) {
  const ShapedNetwork net = testing::alexnet_conv();
  TilePlan plan = testing::published_plan(net);
  plan.layers.resize(2);
  EXPECT_THROW((void)resource_usage(plan, net, DeviceSpec{}), Error);
}

TEST(Schedule, ZcuBudgetGives16x16ForAlexNet) {
  for (const char* name : {"alexnet_conv", "alexnet"}) {
    const ShapedNetwork net = testing::preset_net(name, 4);
    const Schedule s = schedule(net, load_device("zcu102"), 4);
    EXPECT_EQ(s.plan.tm, 16) << name;
    EXPECT_EQ(s.plan.tn, 16) << name;
    EXPECT_EQ(s.resources.d_conv, 1280) << name;
  }
}

TEST(Schedule, AlexNetPlanIsCloseToThePublishedOne) {
  const ShapedNetwork net = testing::alexnet_conv();
  const DeviceSpec dev = load_device("zcu102");
  const Schedule s = schedule(net, dev, 4);
  const LayerTilePlan& conv2 = s.plan.layers[testing::layer_index(net, "conv2")];
  const bool same = conv2.fp.tr == 27 && conv2.fp.tc == 27 && conv2.fp.m_on == 112;
  const double ratio = static_cast<double>(s.predicted_cycles) / static_cast<double>(testing::kPublishedTotal);
  EXPECT_TRUE(same || std::abs(ratio - 1.0) <= 0.02) << "predicted " << s.predicted_cycles;
  EXPECT_EQ(s.predicted_cycles, analytic_total(net, s.plan, dev, 4));
}

TEST(Schedule, DspBoundaryGives4x4) {
  DeviceSpec dev;
  dev.total_dsps = 100;  // budget 80 = 5 * 4 * 4
  const Schedule s = schedule(testing::preset_net("cnn1x", 4), dev, 4);
  EXPECT_EQ(s.plan.tm, 4);
}

TEST(Schedule, IsDeterministic) {
  const ShapedNetwork net = testing::preset_net("cnn1x", 8);
  const Schedule a = schedule(net, DeviceSpec{}, 8);
  const Schedule b = schedule(net, DeviceSpec{}, 8);
  EXPECT_EQ(schedule_to_json(a, net).dump(), schedule_to_json(b, net).dump());
}

TEST(Schedule, EmittedPlansRespectBudgetsAndRules) {
  std::mt19937_64 rng(401);
  std::uniform_int_distribution<std::int64_t> dsps(40, 3000);
  std::uniform_int_distribution<std::int64_t> brams(60, 1200);
  int feasible = 0;
  for (int trial = 0; trial < 40; ++trial) {
    DeviceSpec dev;
    dev.total_dsps = dsps(rng);
    dev.total_brams = brams(rng);
    for (const char* name : {"alexnet_conv", "cnn1x", "lenet10", "tiny_bn"}) {
      const ShapedNetwork net = testing::preset_net(name, 2);
      Schedule s;
      try {
        s = schedule(net, dev, 2);
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), ErrorCode::Infeasible) << e.what();
        continue;
      }
      ++feasible;
      EXPECT_TRUE(plan_rule_violations(s.plan, net).empty()) << name;
      EXPECT_LE(s.resources.d_conv, dev.dsp_budget()) << name;
      EXPECT_LT(s.resources.b_conv, dev.bram_budget()) << name;
      EXPECT_EQ(s.resources, resource_usage(s.plan, net, dev)) << name;
      ASSERT_TRUE(s.plan.banks.has_value());
    }
  }
  EXPECT_GT(feasible, 40);
}

TEST(Schedule, RelaxingTheBudgetNeverSlowsThePlan) {
  for (const char* name : {"alexnet_conv", "cnn1x", "lenet10"}) {
    const ShapedNetwork net = testing::preset_net(name, 4);
    for (std::int64_t brams : {300, 600, 912, 1500}) {
      Cycles prev = std::numeric_limits<Cycles>::max();
      for (std::int64_t dsps : {400, 800, 1600, 2520, 4000}) {
        DeviceSpec dev;
        dev.total_dsps = dsps;
        dev.total_brams = brams;
        Cycles now = 0;
        try {
          now = schedule(net, dev, 4).predicted_cycles;
        } catch (const Error&) {
          ASSERT_EQ(prev, std::numeric_limits<Cycles>::max()) << name << " became infeasible";
          continue;
        }
        EXPECT_LE(now, prev) << name << " dsps=" << dsps << " brams=" << brams;
        prev = now;
      }
    }
    for (std::int64_t dsps : {800, 2520}) {
      Cycles prev = std::numeric_limits<Cycles>::max();
      for (std::int64_t brams : {300, 600, 912, 1500, 3000}) {
        DeviceSpec dev;
        dev.total_dsps = dsps;
        dev.total_brams = brams;
        Cycles now = 0;
        try {
          now = schedule(net, dev, 4).predicted_cycles;
        } catch (const Error&) {
          ASSERT_EQ(prev, std::numeric_limits<Cycles>::max()) << name << " became infeasible";
          continue;
        }
        EXPECT_LE(now, prev) << name << " dsps=" << dsps << " brams=" << brams;
        prev = now;
      }
    }
  }
}

TEST(Schedule, TinyDeviceIsInfeasible) {
  DeviceSpec dev;
  dev.total_dsps = 4;
  try {
    (void)schedule(testing::alexnet_conv(), dev, 4);
    FAIL() << "expected Infeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Infeasible);
  }
}

TEST(Schedule, StartTableCoversEveryApplicableChannel) {
  const ShapedNetwork net = testing::alexnet_conv();
  const Schedule s = schedule(net, DeviceSpec{}, 4);
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.layer(i).kind != LayerKind::Conv) continue;
    for (Channel ch : {Channel::IFM, Channel::WEI, Channel::OUT}) {
      const bool found = std::any_of(s.start_table.begin(), s.start_table.end(), [&](const StartEntry& e) {
        return e.layer == i && e.process == Process::FP && e.channel == ch;
      });
      EXPECT_TRUE(found) << net.layer(i).name << ' ' << to_string(ch);
    }
  }
}

}  // namespace
}  // namespace edgetrain
