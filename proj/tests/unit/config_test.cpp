// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "edgetrain/checkpoint.hpp"
#include "edgetrain/config_io.hpp"
#include "edgetrain/dataset.hpp"
#include "edgetrain/errors.hpp"
#include "edgetrain/presets.hpp"
#include "edgetrain/report.hpp"
#include "support.hpp"

namespace edgetrain {
namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "edgetrain_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvariantViolation;
}

TEST(Presets, AllKeysParse) {
  for (std::string_view key : preset_keys()) {
    const std::string k(key);
    const std::string name = k.substr(k.find('/') + 1);
    if (k.rfind("networks/", 0) == 0) {
      EXPECT_NO_THROW((void)validate_and_infer(load_network(name))) << k;
    } else if (k.rfind("devices/", 0) == 0) {
      EXPECT_NO_THROW((void)load_device(name)) << k;
    }
  }
  EXPECT_FALSE(preset_text("networks/nope").has_value());
}

TEST(Presets, Devices) {
  const DeviceSpec zcu = load_device("zcu102");
  EXPECT_EQ(zcu.total_dsps, 2520);
  EXPECT_EQ(zcu.total_brams, 912);
  const DeviceSpec pynq = load_device("pynq_z1");
  EXPECT_EQ(pynq.total_dsps, 220);
  EXPECT_EQ(pynq.total_brams, 140);
}

TEST(Config, UnknownReferenceIsAConfigError) {
  EXPECT_EQ(code_of([] { (void)load_network("no_such_network"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { (void)network_from_json(Json::parse(R"({"layers":[{"kind":"warp"}]})")); }),
            ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { (void)network_from_json(Json::parse(R"({"layers":[{"kind":"conv","M":"x"}]})")); }),
            ErrorCode::ConfigError);
}

TEST(Config, NetworkRoundTrips) {
  for (const char* name : {"alexnet", "vgg16", "cnn1x", "lenet10", "tiny_bn"}) {
    const NetworkSpec spec = load_network(name);
    EXPECT_EQ(network_from_json(to_json(spec)), spec) << name;
    const ShapedNetwork shaped = validate_and_infer(spec);
    EXPECT_EQ(validate_and_infer(network_from_json(to_json(shaped.spec()))), shaped) << name;
  }
}

TEST(Config, NetworkLoadsFromAFile) {
  const auto path = scratch("net.json");
  write_text_file(path, to_json(load_network("lenet10")).dump());
  EXPECT_EQ(load_network(path.string()), load_network("lenet10"));
}

TEST(Config, DeviceRoundTrips) {
  DeviceSpec d;
  d.name = "x";
  d.t_start = 123;
  d.dsp_budget_frac = 0.5;
  EXPECT_EQ(device_from_json(to_json(d)), d);
  EXPECT_EQ(code_of([] { (void)device_from_json(Json::parse(R"({"t_start":0})")); }), ErrorCode::ConfigError);
}

TEST(Config, PlanRoundTrips) {
  const ShapedNetwork net = testing::alexnet_conv();
  const Schedule s = schedule(net, DeviceSpec{}, 4);
  EXPECT_EQ(plan_from_json(schedule_to_json(s, net), net), s.plan);
  const TilePlan t6 = testing::published_plan(net);
  EXPECT_EQ(plan_from_json(plan_to_json(t6, net), net), t6);
}

TEST(Config, PublishedPlanUsesTheBackwardOverride) {
  const ShapedNetwork net = testing::alexnet_conv();
  const TilePlan plan = testing::published_plan(net);
  const std::size_t conv2 = testing::layer_index(net, "conv2");
  EXPECT_EQ(plan.layers[conv2].bp, (ProcessTile{27, 27, 48}));
  EXPECT_EQ(plan.layers[conv2].fp, (ProcessTile{27, 27, 112}));
  EXPECT_EQ(plan.layers[testing::layer_index(net, "conv3")].bp, (ProcessTile{13, 13, 112}));
}

TEST(Config, PlanMismatchesAreReported) {
  const ShapedNetwork net = testing::alexnet_conv();
  Json j = plan_to_json(testing::published_plan(net), net);
  Json missing = j;
  missing["layers"].erase(0);
  EXPECT_EQ(code_of([&] { (void)plan_from_json(missing, net); }), ErrorCode::PlanMismatch);
  Json extra = j;
  extra["layers"].push_back({{"name", "conv9"}, {"tile", {1, 1, 1}}});
  EXPECT_EQ(code_of([&] { (void)plan_from_json(extra, net); }), ErrorCode::PlanMismatch);
  Json bad = j;
  bad["layers"][0]["fp"] = {99, 55, 96};
  EXPECT_EQ(code_of([&] { (void)plan_from_json(bad, net); }), ErrorCode::InvalidPlan);
}

TEST(Checkpoint, RoundTripsParameters) {
  const ShapedNetwork net = testing::preset_net("tiny_bn");
  Params p = init_params(net, 4);
  p.layers[1].bn->gamma[0] = 2.5F;
  std::stringstream buf;
  write_checkpoint(buf, p);
  EXPECT_EQ(read_checkpoint(buf, net), p);

  const auto path = scratch("ckpt.bin");
  save_checkpoint(path, p);
  EXPECT_EQ(load_checkpoint(path, net), p);
}

TEST(Checkpoint, HeaderIsLittleEndianAndVersioned) {
  const ShapedNetwork net = testing::preset_net("tiny_bn");
  std::stringstream buf;
  write_checkpoint(buf, init_params(net, 1));
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "ETCK");
  EXPECT_EQ(bytes[4], static_cast<char>(kCheckpointVersion));
  EXPECT_EQ(bytes[5], 0);
}

TEST(Checkpoint, RejectsForeignStreams) {
  const ShapedNetwork net = testing::preset_net("tiny_bn");
  std::stringstream junk("JUNKJUNK");
  EXPECT_EQ(code_of([&] { (void)read_checkpoint(junk, net); }), ErrorCode::ConfigError);
  std::stringstream other;
  write_checkpoint(other, init_params(testing::preset_net("lenet10"), 1));
  EXPECT_EQ(code_of([&] { (void)read_checkpoint(other, net); }), ErrorCode::ShapeMismatch);
}

TEST(Dataset, RoundTripsAndWraps) {
  const Dataset d = synthetic_separable(10, {2, 3, 3}, 3, 7);
  std::stringstream buf;
  write_dataset(buf, d);
  const Dataset back = read_dataset(buf);
  EXPECT_EQ(back.images, d.images);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.classes, 3);
  const Batch b = d.batch(3, 4);  // samples 12..15 wrap to 2..5
  EXPECT_EQ(b.labels, (std::vector<std::int32_t>{d.labels[2], d.labels[3], d.labels[4], d.labels[5]}));
  EXPECT_EQ(synthetic_separable(10, {2, 3, 3}, 3, 7).images, d.images);
  EXPECT_NE(synthetic_separable(10, {2, 3, 3}, 3, 8).images, d.images);
}

TEST(Dataset, RejectsLabelsOutsideTheClassCount) {
  Dataset d = synthetic_separable(2, {1, 1, 1}, 2, 1);
  d.labels[1] = 5;
  std::stringstream buf;
  write_dataset(buf, d);
  EXPECT_EQ(code_of([&] { (void)read_dataset(buf); }), ErrorCode::LabelOutOfRange);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(fields);
  }
  return rows;
}

TEST(Report, PublishedPlanTotal) {
  const ShapedNetwork net = testing::alexnet_conv();
  const LatencyReport rep = network_report(net, testing::published_plan(net), DeviceSpec{}, 4);
  EXPECT_NEAR(static_cast<double>(rep.analytic_total), static_cast<double>(testing::kPublishedTotal),
              0.01 * testing::kPublishedTotal);
  const LatencyReport one = network_report(net.with_batch(1), testing::published_plan(net), DeviceSpec{}, 1);
  EXPECT_LT(one.analytic_total, rep.analytic_total);
  EXPECT_GT(rep.gflops(), 0.0);
}

TEST(Report, NetworkWithoutConvLayersCostsNothing) {
  NetworkSpec spec;
  spec.input = FeatureShape{2, 4, 4};
  spec.layers = {make_simple(LayerKind::ReLU, "r")};
  const ShapedNetwork net = validate_and_infer(spec);
  ReportOptions opt;
  opt.simulate = LayoutKind::RESHAPED;
  const LatencyReport rep = network_report(net, default_plan(net, 4), DeviceSpec{}, 1, opt);
  EXPECT_EQ(rep.analytic_total, 0);
  EXPECT_EQ(rep.simulated_total, 0);
}

TEST(Report, SimulatedDeviationStaysWithinFivePercent) {
  const ShapedNetwork net = testing::alexnet_conv();
  ReportOptions opt;
  opt.simulate = LayoutKind::RESHAPED;
  const LatencyReport rep = network_report(net, testing::published_plan(net), DeviceSpec{}, 4, opt);
  for (const LayerReport& lr : rep.layers) {
    if (lr.kind != LayerKind::Conv) continue;
    for (const ProcessReport& pr : lr.processes) {
      if (!pr.applicable) continue;
      ASSERT_TRUE(pr.deviation().has_value());
      EXPECT_LE(std::abs(*pr.deviation()), 0.05) << lr.name << ' ' << to_string(pr.process);
    }
  }
  for (const LayerReport& lr : rep.layers) {
    if (lr.kind == LayerKind::MaxPool) {
      EXPECT_TRUE(lr.estimated_by_simulation && lr.at(Process::FP).simulated.has_value());
    }
  }
}

TEST(Report, CsvAndJsonAgreeFieldForField) {
  const ShapedNetwork net = testing::alexnet_conv();
  ReportOptions opt;
  opt.simulate = LayoutKind::BCHW;
  const LatencyReport rep = network_report(net, testing::published_plan(net), DeviceSpec{}, 4, opt);
  const Json j = Json::parse(to_json(rep).dump());
  const auto rows = parse_csv(to_csv(rep));
  ASSERT_EQ(rows.size(), 1 + 3 * net.size() + 1);
  std::size_t r = 1;
  for (const auto& lj : j["layers"]) {
    for (const auto& pj : lj["processes"]) {
      const auto& row = rows[r++];
      ASSERT_EQ(row.size(), 9U);
      EXPECT_EQ(row[0], lj["name"].get<std::string>());
      EXPECT_EQ(row[1], lj["kind"].get<std::string>());
      EXPECT_EQ(row[2], pj["process"].get<std::string>());
      EXPECT_EQ(row[3] == "1", pj["applicable"].get<bool>());
      EXPECT_EQ(row[4], pj["analytic_cycles"].is_null() ? "" : std::to_string(pj["analytic_cycles"].get<std::int64_t>()));
      EXPECT_EQ(row[5], pj["simulated_cycles"].is_null() ? "" : std::to_string(pj["simulated_cycles"].get<std::int64_t>()));
      if (pj["deviation"].is_null()) {
        EXPECT_EQ(row[6], "");
      } else {
        EXPECT_NEAR(std::stod(row[6]), pj["deviation"].get<double>(), 1e-6);
      }
      EXPECT_EQ(row[7], std::to_string(pj["restarts"].get<std::uint64_t>()));
      EXPECT_EQ(row[8] == "1", lj["estimated_by_simulation"].get<bool>());
    }
  }
  const auto& total = rows.back();
  EXPECT_EQ(total[4], std::to_string(j["totals"]["analytic_cycles"].get<std::int64_t>()));
  EXPECT_EQ(total[5], std::to_string(j["totals"]["simulated_cycles"].get<std::int64_t>()));
}

TEST(Report, SchemaCheckRejectsInconsistentTotals) {
  const ShapedNetwork net = testing::alexnet_conv();
  const LatencyReport rep = network_report(net, testing::published_plan(net), DeviceSpec{}, 4);
  Json j = to_json(rep);
  EXPECT_NO_THROW(validate_report_json(j));
  j["totals"]["analytic_cycles"] = 1;
  EXPECT_EQ(code_of([&] { validate_report_json(j); }), ErrorCode::InvariantViolation);
  Json k = to_json(rep);
  k["layers"][0].erase("processes");
  EXPECT_EQ(code_of([&] { validate_report_json(k); }), ErrorCode::InvariantViolation);
}

TEST(Report, AuditIncludesIntermediateTerms) {
  const ShapedNetwork net = testing::alexnet_conv();
  ReportOptions opt;
  opt.audit = true;
  const Json j = to_json(network_report(net, testing::published_plan(net), DeviceSpec{}, 4, opt));
  EXPECT_TRUE(j["layers"][0]["processes"][0].contains("audit"));
}

TEST(Report, LayoutDumpListsBursts) {
  const ShapedNetwork net = testing::preset_net("cnn1x", 2);
  const std::string csv = layout_dump_csv(net, default_plan(net, 16), LayoutKind::RESHAPED, DeviceSpec{});
  const auto rows = parse_csv(csv);
  ASSERT_GT(rows.size(), 10U);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"layer", "process", "channel", "burst_index", "start_word", "length"}));
}

}  // namespace
}  // namespace edgetrain
