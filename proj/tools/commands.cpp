// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "edgetrain/checkpoint.hpp"
#include "edgetrain/config_io.hpp"
#include "edgetrain/dataset.hpp"
#include "edgetrain/errors.hpp"
#include "edgetrain/reftrain.hpp"
#include "edgetrain/report.hpp"
#include "edgetrain/sched.hpp"

namespace edgetrain::cli {

namespace {

struct Loaded {
  ShapedNetwork net;
  DeviceSpec dev;
  std::int64_t batch = 1;
};

Loaded load(const RunConfig& cfg) {
  require(!cfg.net.empty(), ErrorCode::ConfigError, "--net is required");
  NetworkSpec spec = load_network(cfg.net);
  if (cfg.batch) spec.batch = *cfg.batch;
  ShapedNetwork net = validate_and_infer(spec);
  return {net, load_device(cfg.device), net.batch()};
}

TilePlan plan_for(const RunConfig& cfg, const Loaded& in) {
  if (cfg.plan) return load_plan(*cfg.plan, in.net);
  return schedule(in.net, in.dev, in.batch).plan;
}

// Writes to <out>/<name> when an output directory is set, else to the stream.
void emit(const RunConfig& cfg, const std::string& name, const std::string& text,
          std::ostream& out) {
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  const auto path = std::filesystem::path(cfg.out) / name;
  write_text_file(path, text);
  out << "wrote " << path.string() << '\n';
}

void emit_report(const RunConfig& cfg, const LatencyReport& rep, std::ostream& out) {
  if (cfg.format == Format::Csv) {
    emit(cfg, "report.csv", to_csv(rep), out);
  } else {
    emit(cfg, "report.json", to_json(rep).dump(2) + "\n", out);
  }
}

std::string summary(const Schedule& s, const ShapedNetwork& net, const DeviceSpec& dev) {
  std::ostringstream o;
  o << "network " << net.spec().name << " on " << dev.name << ": Tm = Tn = " << s.plan.tm << '\n';
  o << "DSPs " << s.resources.d_conv << " / budget " << dev.dsp_budget() << ", BRAM banks "
    << s.resources.b_conv << " / budget " << dev.bram_budget() << " (IFM " << s.resources.b_ifm
    << ", OFM " << s.resources.b_ofm << ", WEI " << s.resources.b_wei << " per buffer)\n";
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerSpec& l = net.layer(i);
    if (!l.conv_like()) continue;
    const auto& lp = s.plan.layers[i];
    o << "  " << l.name << " fp [" << lp.fp.tr << ',' << lp.fp.tc << ',' << lp.fp.m_on << "] bp ["
      << lp.bp.tr << ',' << lp.bp.tc << ',' << lp.bp.m_on << "] wu [" << lp.wu.tr << ','
      << lp.wu.tc << ',' << lp.wu.m_on << "]\n";
  }
  o << "predicted cycles " << s.predicted_cycles << '\n';
  return o.str();
}

}  // namespace

int cmd_schedule(const RunConfig& cfg, std::ostream& out) {
  const Loaded in = load(cfg);
  const Schedule s = schedule(in.net, in.dev, in.batch);
  const std::string plan = schedule_to_json(s, in.net).dump(2) + "\n";
  if (cfg.out.empty()) {
    out << plan;
  } else {
    emit(cfg, "plan.json", plan, out);
    out << summary(s, in.net, in.dev);
  }
  return 0;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  const Loaded in = load(cfg);
  ReportOptions opt;
  opt.audit = cfg.audit;
  emit_report(cfg, network_report(in.net, plan_for(cfg, in), in.dev, in.batch, opt), out);
  return 0;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const LayoutKind kind = parse_layout_kind(cfg.layout);
  const Loaded in = load(cfg);
  ReportOptions opt;
  opt.simulate = kind;
  opt.audit = cfg.audit;
  const LatencyReport rep = network_report(in.net, plan_for(cfg, in), in.dev, in.batch, opt);
  emit_report(cfg, rep, out);
  if (!cfg.out.empty()) emit(cfg, "bursts.csv", burst_csv(rep), out);
  return 0;
}

int cmd_layout_dump(const RunConfig& cfg, std::ostream& out) {
  const LayoutKind kind = parse_layout_kind(cfg.layout);
  const Loaded in = load(cfg);
  emit(cfg, "layout.csv", layout_dump_csv(in.net, plan_for(cfg, in), kind, in.dev), out);
  return 0;
}

int cmd_train(const RunConfig& cfg, const TrainConfig& train, std::ostream& out) {
  require(!cfg.net.empty(), ErrorCode::ConfigError, "--net is required");
  NetworkSpec spec = load_network(cfg.net);
  if (cfg.batch) spec.batch = *cfg.batch;
  if (train.learning_rate) spec.learning_rate = *train.learning_rate;
  // A zero rate runs forward passes only.
  const bool frozen = spec.learning_rate == 0.0;
  if (frozen) spec.learning_rate = 1.0;
  ShapedNetwork net = validate_and_infer(spec);
  require(net.has_loss(), ErrorCode::ShapeMismatch, "training needs a terminal softmax_xent layer");

  const Dataset data = train.dataset ? load_dataset(*train.dataset)
                                     : synthetic_separable(train.samples, net.input_shape(),
                                                           train.classes, cfg.seed);
  require(data.shape() == net.input_shape(), ErrorCode::ShapeMismatch,
          "dataset images do not match the network input");
  const std::int64_t classes = net.layers().back().M;
  require(data.classes <= classes, ErrorCode::LabelOutOfRange,
          "dataset has more classes than the network outputs");

  const std::int64_t B = net.batch();
  const std::int64_t steps =
      train.epochs ? *train.epochs * ceil_div(data.samples(), B) : train.steps;
  require(steps >= 1, ErrorCode::ConfigError, "need at least one step");

  Params params = init_params(net, cfg.seed);
  std::ostringstream log;
  log << "step,loss\n";
  double first = 0.0;
  double last = 0.0;
  for (std::int64_t step = 0; step < steps; ++step) {
    const Batch batch = data.batch(step, B);
    double loss = 0.0;
    if (frozen) {
      loss = forward(net, params, batch).loss;
    } else {
      TrainStep r = train_minibatch(net, std::move(params), batch);
      params = std::move(r.params);
      loss = r.loss;
    }
    if (step == 0) first = loss;
    last = loss;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%lld,%.9g\n", static_cast<long long>(step + 1), loss);
    log << buf;
  }
  if (cfg.out.empty()) {
    out << log.str();
  } else {
    emit(cfg, "loss.csv", log.str(), out);
    const auto ckpt = std::filesystem::path(cfg.out) / "checkpoint.bin";
    save_checkpoint(ckpt, params);
    out << "wrote " << ckpt.string() << '\n';
    out << "loss " << first << " -> " << last << " over " << steps << " steps\n";
  }
  return 0;
}

}  // namespace edgetrain::cli
