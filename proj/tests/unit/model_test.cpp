// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "edgetrain/errors.hpp"
#include "edgetrain/model.hpp"
#include "support.hpp"

namespace edgetrain {
namespace {

using testing::preset_net;

TEST(ShapeInference, Cnn1xResolvesEveryLayer) {
  const ShapedNetwork net = preset_net("cnn1x");
  std::size_t conv = 0;
  std::size_t pool = 0;
  for (const auto& l : net.layers()) {
    conv += l.kind == LayerKind::Conv;
    pool += l.pooling();
  }
  EXPECT_EQ(conv, 6U);
  EXPECT_EQ(pool, 3U);
  const LayerSpec& fc = net.layer(testing::layer_index(net, "fc1"));
  EXPECT_EQ(fc.N, 1024);
  EXPECT_EQ(fc.R_in, 1);
  EXPECT_EQ(fc.C_in, 1);
  EXPECT_EQ(fc.input_shape(), (FeatureShape{1024, 1, 1}));
  EXPECT_TRUE(net.has_loss());
}

TEST(ShapeInference, UnitConvComesBackUnchanged) {
  NetworkSpec spec;
  spec.layers = {make_conv(1, 1, 1, 1, 1, 1, 0, "c")};
  const ShapedNetwork net = validate_and_infer(spec);
  LayerSpec want = spec.layers[0];
  want.R_in = want.C_in = 1;
  EXPECT_EQ(net.layer(0), want);
  EXPECT_EQ(net.input_shape(), (FeatureShape{1, 1, 1}));
}

TEST(ShapeInference, ChannelMismatchIsRejected) {
  NetworkSpec spec;
  spec.input = FeatureShape{3, 8, 8};
  spec.layers = {make_conv(8, 3, 8, 8, 3, 1, 1, "a"), make_conv(4, 16, 8, 8, 3, 1, 1, "b")};
  try {
    (void)validate_and_infer(spec);
    FAIL() << "expected ShapeMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(ShapeInference, KernelLargerThanInputIsInvalid) {
  NetworkSpec spec;
  spec.input = FeatureShape{1, 2, 2};
  spec.layers = {make_conv(1, 1, 0, 0, 3, 1, 0, "c")};
  try {
    (void)validate_and_infer(spec);
    FAIL() << "expected InvalidLayer";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidLayer);
  }
}

TEST(ShapeInference, EmptyNetworkIsInvalid) {
  EXPECT_THROW((void)validate_and_infer(NetworkSpec{}), Error);
}

TEST(ShapeInference, SoftmaxMustBeLast) {
  NetworkSpec spec;
  spec.input = FeatureShape{4, 1, 1};
  spec.layers = {make_simple(LayerKind::SoftmaxXent), make_fc(2, 4)};
  EXPECT_THROW((void)validate_and_infer(spec), Error);
}

TEST(ShapeInference, IsIdempotent) {
  for (const char* name : {"alexnet", "vgg16", "cnn1x", "lenet10", "tiny_bn"}) {
    const ShapedNetwork once = preset_net(name);
    EXPECT_EQ(validate_and_infer(once.spec()), once) << name;
  }
}

TEST(ShapeInference, UnnamedLayersGetKindOrdinals) {
  NetworkSpec spec;
  spec.input = FeatureShape{2, 6, 6};
  spec.layers = {make_conv(2, 2, 0, 0, 3, 1, 1), make_simple(LayerKind::ReLU),
                 make_conv(2, 2, 0, 0, 3, 1, 1), make_pool(LayerKind::MaxPool, 2, 2)};
  const ShapedNetwork net = validate_and_infer(spec);
  EXPECT_EQ(net.layer(0).name, "conv1");
  EXPECT_EQ(net.layer(1).name, "relu1");
  EXPECT_EQ(net.layer(2).name, "conv2");
  EXPECT_EQ(net.layer(3).name, "maxpool1");
}

TEST(ShapeInference, DuplicateNamesAreRejected) {
  NetworkSpec spec;
  spec.input = FeatureShape{1, 4, 4};
  spec.layers = {make_simple(LayerKind::ReLU, "x"), make_simple(LayerKind::ReLU, "x")};
  EXPECT_THROW((void)validate_and_infer(spec), Error);
}

TEST(TrainOps, LeNet10) {
  const double ops = static_cast<double>(count_train_ops(preset_net("lenet10")));
  EXPECT_NEAR(ops, 25.17e6, 0.01 * 25.17e6);
}

TEST(TrainOps, UnitConv) {
  NetworkSpec spec;
  spec.layers = {make_conv(1, 1, 1, 1, 1, 1, 0, "c")};
  EXPECT_EQ(count_train_ops(validate_and_infer(spec)), 4);
}

TEST(TrainOps, Cnn1xMatchesLayerSum) {
  // [M, N, R, C, K] of every Conv/FC layer, first one separately.
  const std::int64_t dims[7][5] = {{16, 3, 32, 32, 3},  {16, 16, 32, 32, 3}, {32, 16, 16, 16, 3},
                                   {32, 32, 16, 16, 3}, {64, 32, 8, 8, 3},   {64, 64, 8, 8, 3},
                                   {10, 1024, 1, 1, 1}};
  std::int64_t later = 0;
  std::int64_t first = 0;
  for (std::size_t i = 0; i < 7; ++i) {
    const auto* d = dims[i];
    const std::int64_t macs = d[0] * d[1] * d[2] * d[3] * d[4] * d[4];
    if (i == 0) {
      first = macs;
    } else {
      later += macs;
    }
  }
  EXPECT_EQ(count_train_ops(preset_net("cnn1x")), 2 * (3 * later + 2 * first));
}

TEST(Device, DefaultsAndBudgets) {
  const DeviceSpec d;
  EXPECT_EQ(d.t_start, 400);
  EXPECT_EQ(d.stream_width_words, 4);
  EXPECT_EQ(d.dsps_per_mac, 5);
  EXPECT_EQ(d.bits_per_word, 32);
  EXPECT_EQ(d.dsp_budget(), 2016);
  EXPECT_EQ(d.bram_budget(), 684);
  EXPECT_NO_THROW(d.validate());
}

TEST(Device, RejectsNonPositiveFields) {
  DeviceSpec d;
  d.stream_width_words = 0;
  EXPECT_THROW(d.validate(), Error);
  d = DeviceSpec{};
  d.bram_budget_frac = 1.5;
  EXPECT_THROW(d.validate(), Error);
}

}  // namespace
}  // namespace edgetrain
