// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/report.hpp"

#include <cstdio>
#include <sstream>

#include "edgetrain/errors.hpp"
#include "edgetrain/program.hpp"

namespace edgetrain {

namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

template <typename T>
Json nullable(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::string csv_field(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return fixed(*v);
  } else {
    return std::to_string(*v);
  }
}

void expect(bool ok, const std::string& what) {
  require(ok, ErrorCode::InvariantViolation, "malformed report: " + what);
}

}  // namespace

std::optional<double> ProcessReport::deviation() const noexcept {
  if (!analytic || !simulated || *analytic == 0) return std::nullopt;
  return static_cast<double>(*simulated - *analytic) / static_cast<double>(*analytic);
}

double LatencyReport::gflops() const noexcept {
  if (analytic_total <= 0) return 0.0;
  const double seconds = static_cast<double>(analytic_total) / clock_hz;
  return static_cast<double>(train_ops) * static_cast<double>(batch) / seconds / 1e9;
}

LatencyReport network_report(const ShapedNetwork& net, const TilePlan& plan,
                             const DeviceSpec& dev, std::int64_t batch,
                             const ReportOptions& options) {
  require(batch >= 1, ErrorCode::InvalidLayer, "batch must be >= 1");
  validate_plan(plan, net);
  LatencyReport rep;
  rep.network = net.spec().name;
  rep.device = dev.name;
  rep.batch = batch;
  rep.clock_hz = dev.clock_hz;
  rep.layout = options.simulate;
  rep.train_ops = count_train_ops(net);
  if (options.simulate) rep.simulated_total = 0;

  const auto first = net.first_conv_like();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerSpec& l = net.layer(i);
    LayerReport lr;
    lr.name = l.name;
    lr.kind = l.kind;
    lr.estimated_by_simulation = l.pooling() || l.kind == LayerKind::BatchNorm;
    for (Process p : kProcesses) {
      ProcessReport& pr = lr.processes[static_cast<std::size_t>(p)];
      pr.process = p;
      pr.applicable = process_applicable(l, p, first == i);
      if (!pr.applicable) continue;
      if (l.conv_like()) {
        LayerLatency lat = process_latency(p, l, plan.layers[i], plan.tm, dev, batch, first == i,
                                           options.analytic);
        pr.analytic = lat.cycles;
        if (options.audit) pr.audit = std::move(lat.audit);
        rep.analytic_total += lat.cycles;
      }
      if (options.simulate) {
        SimResult sim = simulate_layer(p, l, plan.layers[i], plan.tm, *options.simulate, dev, batch,
                                       first == i);
        pr.simulated = sim.cycles;
        pr.restarts = sim.restarts();
        if (l.conv_like()) *rep.simulated_total += sim.cycles;
        pr.sim = std::move(sim);
      }
    }
    rep.layers.push_back(std::move(lr));
  }
  return rep;
}

Json to_json(const LatencyReport& rep) {
  Json j;
  j["network"] = rep.network;
  j["device"] = rep.device;
  j["batch"] = rep.batch;
  j["clock_hz"] = rep.clock_hz;
  j["layout"] = rep.layout ? Json(std::string(to_string(*rep.layout))) : Json(nullptr);
  Json layers = Json::array();
  for (const auto& lr : rep.layers) {
    Json lj;
    lj["name"] = lr.name;
    lj["kind"] = std::string(to_string(lr.kind));
    lj["estimated_by_simulation"] = lr.estimated_by_simulation;
    Json procs = Json::array();
    for (const auto& pr : lr.processes) {
      Json pj;
      pj["process"] = std::string(to_string(pr.process));
      pj["applicable"] = pr.applicable;
      pj["analytic_cycles"] = nullable(pr.analytic);
      pj["simulated_cycles"] = nullable(pr.simulated);
      pj["deviation"] = nullable(pr.deviation());
      pj["restarts"] = pr.restarts;
      if (!pr.audit.empty()) {
        Json audit = Json::object();
        for (const auto& [term, value] : pr.audit) audit[term] = value;
        pj["audit"] = std::move(audit);
      }
      procs.push_back(std::move(pj));
    }
    lj["processes"] = std::move(procs);
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["totals"] = {{"analytic_cycles", rep.analytic_total},
                 {"simulated_cycles", nullable(rep.simulated_total)},
                 {"train_ops", rep.train_ops},
                 {"gflops", rep.gflops()}};
  validate_report_json(j);
  return j;
}

void validate_report_json(const Json& j) {
  expect(j.is_object(), "not an object");
  for (const char* key : {"network", "device", "batch", "clock_hz", "layout", "layers", "totals"})
    expect(j.contains(key), std::string("missing '") + key + "'");
  expect(j["batch"].is_number_integer() && j["batch"].get<std::int64_t>() >= 1, "batch");
  expect(j["layers"].is_array(), "layers is not an array");
  std::int64_t analytic = 0;
  std::int64_t simulated = 0;
  for (const auto& lj : j["layers"]) {
    expect(lj.contains("name") && lj["name"].is_string(), "layer name");
    expect(lj.contains("kind") && lj["kind"].is_string(), "layer kind");
    expect(lj.contains("processes") && lj["processes"].is_array() && lj["processes"].size() == 3,
           "layer '" + lj.value("name", std::string{}) + "' needs three processes");
    const std::string kind = lj.value("kind", std::string{});
    const bool counted = kind == to_string(LayerKind::Conv) || kind == to_string(LayerKind::FC);
    for (const auto& pj : lj["processes"]) {
      for (const char* key : {"process", "applicable", "analytic_cycles", "simulated_cycles"})
        expect(pj.contains(key), std::string("process entry missing '") + key + "'");
      const auto& a = pj["analytic_cycles"];
      const auto& s = pj["simulated_cycles"];
      expect(a.is_null() || (a.is_number_integer() && a.get<std::int64_t>() >= 0), "analytic cycles");
      expect(s.is_null() || (s.is_number_integer() && s.get<std::int64_t>() >= 0), "simulated cycles");
      if (!pj["applicable"].get<bool>()) expect(a.is_null() && s.is_null(), "cycles on an inapplicable process");
      if (counted && a.is_number()) analytic += a.get<std::int64_t>();
      if (counted && s.is_number()) simulated += s.get<std::int64_t>();
    }
  }
  const auto& t = j["totals"];
  expect(t.contains("analytic_cycles") && t["analytic_cycles"].get<std::int64_t>() == analytic,
         "analytic total does not equal the layer sum");
  if (!t["simulated_cycles"].is_null())
    expect(t["simulated_cycles"].get<std::int64_t>() == simulated,
           "simulated total does not equal the layer sum");
}

std::string to_csv(const LatencyReport& rep) {
  std::ostringstream out;
  out << "layer,kind,process,applicable,analytic_cycles,simulated_cycles,deviation,restarts,"
         "estimated_by_simulation\n";
  for (const auto& lr : rep.layers) {
    for (const auto& pr : lr.processes) {
      out << lr.name << ',' << to_string(lr.kind) << ',' << to_string(pr.process) << ','
          << (pr.applicable ? 1 : 0) << ',' << csv_field(pr.analytic) << ','
          << csv_field(pr.simulated) << ',' << csv_field(pr.deviation()) << ',' << pr.restarts
          << ',' << (lr.estimated_by_simulation ? 1 : 0) << '\n';
    }
  }
  out << "total,,all,1," << rep.analytic_total << ',' << csv_field(rep.simulated_total) << ",,,0\n";
  return out.str();
}

std::string burst_csv(const LatencyReport& rep) {
  std::ostringstream out;
  out << "layer,process,channel,burst_length,count,busy_cycles\n";
  for (const auto& lr : rep.layers) {
    for (const auto& pr : lr.processes) {
      if (!pr.sim) continue;
      for (Channel ch : kChannels) {
        const ChannelStats& st = pr.sim->channel(ch);
        for (const auto& [len, count] : st.burst_hist)
          out << lr.name << ',' << to_string(pr.process) << ',' << to_string(ch) << ',' << len
              << ',' << count << ',' << st.busy << '\n';
      }
    }
  }
  return out.str();
}

std::string layout_dump_csv(const ShapedNetwork& net, const TilePlan& plan, LayoutKind kind,
                            const DeviceSpec& dev) {
  const NetworkLayout layout = build_network_layout(net, plan, kind, dev.stream_width_words);
  std::ostringstream out;
  out << "layer,process,channel,burst_index,start_word,length\n";
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (Process p : kProcesses) {
      const LayerProgram& prog = layout.programs[i][static_cast<std::size_t>(p)];
      if (!prog.applicable) continue;
      for (const ChannelTrace& trace : trace_program(prog)) {
        if (trace.addrs.empty()) continue;
        std::size_t index = 0;
        for (const Burst& b : split_bursts(trace))
          out << net.layer(i).name << ',' << to_string(p) << ',' << to_string(trace.channel) << ','
              << index++ << ',' << b.start << ',' << b.len << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace edgetrain
