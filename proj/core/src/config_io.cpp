// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/config_io.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "edgetrain/errors.hpp"
#include "edgetrain/presets.hpp"

namespace edgetrain {

namespace {

template <typename F>
auto guarded(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, what + ": " + e.what());
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

ProcessTile tile_from_json(const Json& j) {
  require(j.is_array() && j.size() == 3, ErrorCode::ConfigError,
          "tile must be [Tr, Tc, M_on], got " + j.dump());
  return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>(), j[2].get<std::int64_t>()};
}

Json tile_to_json(const ProcessTile& t) { return Json::array({t.tr, t.tc, t.m_on}); }

// The shorthand tile shrunk to the backward geometry.
ProcessTile fit_to(const ProcessTile& t, const ProcessGeometry& g) {
  return {std::min(t.tr, g.out_rows), std::min(t.tc, g.out_cols), std::min(t.m_on, g.out_ch)};
}

std::string process_key(Process p) {
  std::string key(to_string(p));
  for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return key;
}

std::string preset_key(const std::string& dir, const std::string& ref) {
  return dir + "/" + ref;
}

Json resolve(const std::string& ref, const std::string& dir) {
  const std::filesystem::path path(ref);
  if (std::filesystem::exists(path)) return read_json_file(path);
  if (auto text = preset_text(preset_key(dir, ref))) {
    return guarded("preset '" + ref + "'", [&] { return Json::parse(*text); });
  }
  fail(ErrorCode::ConfigError, "'" + ref + "' is neither a file nor a known " + dir + " preset");
}

}  // namespace

NetworkSpec network_from_json(const Json& j) {
  return guarded("network", [&] {
    NetworkSpec net;
    read_opt(j, "name", net.name);
    read_opt(j, "batch", net.batch);
    read_opt(j, "learning_rate", net.learning_rate);
    read_opt(j, "preset", net.preset);
    if (auto it = j.find("input"); it != j.end()) {
      require(it->is_array() && it->size() == 3, ErrorCode::ConfigError,
              "input must be [channels, rows, cols]");
      net.input = FeatureShape{(*it)[0].get<std::int64_t>(), (*it)[1].get<std::int64_t>(),
                               (*it)[2].get<std::int64_t>()};
    }
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      l.kind = parse_layer_kind(lj.at("kind").get<std::string>());
      read_opt(lj, "name", l.name);
      if (auto it = lj.find("shape"); it != lj.end()) {
        require(it->is_array() && it->size() == 6, ErrorCode::ConfigError,
                "shape must be [M, N, R, C, K, S]");
        const auto v = it->get<std::vector<std::int64_t>>();
        l.M = v[0];
        l.N = v[1];
        l.R = v[2];
        l.C = v[3];
        l.K = v[4];
        l.S = v[5];
      }
      read_opt(lj, "M", l.M);
      read_opt(lj, "N", l.N);
      read_opt(lj, "R", l.R);
      read_opt(lj, "C", l.C);
      read_opt(lj, "K", l.K);
      read_opt(lj, "S", l.S);
      read_opt(lj, "pad", l.pad);
      if (l.kind == LayerKind::FC) l.R = l.C = 1;
      net.layers.push_back(std::move(l));
    }
    return net;
  });
}

Json to_json(const NetworkSpec& net) {
  Json j;
  j["name"] = net.name;
  j["batch"] = net.batch;
  j["learning_rate"] = net.learning_rate;
  if (net.preset) j["preset"] = true;
  if (net.input) j["input"] = Json::array({net.input->channels, net.input->rows, net.input->cols});
  Json layers = Json::array();
  for (const auto& l : net.layers) {
    Json lj;
    lj["kind"] = std::string(to_string(l.kind));
    if (!l.name.empty()) lj["name"] = l.name;
    lj["shape"] = Json::array({l.M, l.N, l.R, l.C, l.K, l.S});
    lj["pad"] = l.pad;
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

DeviceSpec device_from_json(const Json& j) {
  return guarded("device", [&] {
    DeviceSpec d;
    read_opt(j, "name", d.name);
    read_opt(j, "total_dsps", d.total_dsps);
    read_opt(j, "total_brams", d.total_brams);
    read_opt(j, "bram_bits", d.bram_bits);
    read_opt(j, "bram_usable_bits", d.bram_usable_bits);
    read_opt(j, "dsps_per_mac", d.dsps_per_mac);
    read_opt(j, "stream_width_words", d.stream_width_words);
    read_opt(j, "t_start", d.t_start);
    read_opt(j, "bits_per_word", d.bits_per_word);
    read_opt(j, "dsp_budget_frac", d.dsp_budget_frac);
    read_opt(j, "bram_budget_frac", d.bram_budget_frac);
    read_opt(j, "clock_hz", d.clock_hz);
    d.validate();
    return d;
  });
}

Json to_json(const DeviceSpec& d) {
  Json j;
  j["name"] = d.name;
  j["total_dsps"] = d.total_dsps;
  j["total_brams"] = d.total_brams;
  j["bram_bits"] = d.bram_bits;
  j["bram_usable_bits"] = d.bram_usable_bits;
  j["dsps_per_mac"] = d.dsps_per_mac;
  j["stream_width_words"] = d.stream_width_words;
  j["t_start"] = d.t_start;
  j["bits_per_word"] = d.bits_per_word;
  j["dsp_budget_frac"] = d.dsp_budget_frac;
  j["bram_budget_frac"] = d.bram_budget_frac;
  j["clock_hz"] = d.clock_hz;
  return j;
}

TilePlan plan_from_json(const Json& j, const ShapedNetwork& net) {
  return guarded("plan", [&] {
    TilePlan plan;
    plan.tm = j.at("tm").get<std::int64_t>();
    plan.tn = j.value("tn", plan.tm);
    std::map<std::string, const Json*> by_name;
    for (const auto& lj : j.at("layers")) {
      const auto name = lj.at("name").get<std::string>();
      require(by_name.emplace(name, &lj).second, ErrorCode::PlanMismatch,
              "plan lists layer '" + name + "' twice");
    }
    const auto first = net.first_conv_like();
    for (std::size_t i = 0; i < net.size(); ++i) {
      const LayerSpec& l = net.layer(i);
      LayerTilePlan lp = default_layer_plan(l);
      auto it = by_name.find(l.name);
      if (it == by_name.end()) {
        require(!l.conv_like(), ErrorCode::PlanMismatch,
                "plan has no entry for layer '" + l.name + "'");
      } else {
        const Json& lj = *it->second;
        if (auto t = lj.find("tile"); t != lj.end()) {
          const ProcessTile tile = tile_from_json(*t);
          lp.fp = lp.wu = tile;
          if (process_applicable(l, Process::BP, first == i))
            lp.bp = fit_to(tile, process_geometry(l, Process::BP));
        }
        for (Process p : kProcesses) {
          if (auto t = lj.find(process_key(p)); t != lj.end())
            lp.at(p) = tile_from_json(*t);
        }
        by_name.erase(it);
      }
      plan.layers.push_back(lp);
    }
    if (!by_name.empty()) {
      fail(ErrorCode::PlanMismatch, "plan names unknown layer '" + by_name.begin()->first + "'");
    }
    if (auto b = j.find("banks"); b != j.end()) {
      plan.banks = BufferBanks{b->at("ifm").get<std::int64_t>(), b->at("ofm").get<std::int64_t>(),
                               b->at("wei").get<std::int64_t>()};
    }
    validate_plan(plan, net);
    return plan;
  });
}

Json plan_to_json(const TilePlan& plan, const ShapedNetwork& net) {
  validate_plan(plan, net);
  Json j;
  j["tm"] = plan.tm;
  j["tn"] = plan.tn;
  Json layers = Json::array();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerSpec& l = net.layer(i);
    Json lj;
    lj["name"] = l.name;
    lj["kind"] = std::string(to_string(l.kind));
    for (Process p : kProcesses) lj[process_key(p)] = tile_to_json(plan.layers[i].at(p));
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  if (plan.banks) j["banks"] = {{"ifm", plan.banks->ifm}, {"ofm", plan.banks->ofm}, {"wei", plan.banks->wei}};
  return j;
}

Json to_json(const ResourceUsage& u) {
  return {{"d_conv", u.d_conv}, {"b_ifm", u.b_ifm}, {"b_ofm", u.b_ofm},
          {"b_wei", u.b_wei},   {"b_conv", u.b_conv}};
}

Json to_json(const StartEntry& e) {
  return {{"layer", e.layer_name},
          {"process", std::string(to_string(e.process))},
          {"channel", std::string(to_string(e.channel))},
          {"region", e.region},
          {"region_offset", e.region_offset},
          {"first_word", e.first_word}};
}

Json schedule_to_json(const Schedule& s, const ShapedNetwork& net) {
  Json j = plan_to_json(s.plan, net);
  j["resources"] = to_json(s.resources);
  j["predicted_cycles"] = s.predicted_cycles;
  Json table = Json::array();
  for (const auto& e : s.start_table) table.push_back(to_json(e));
  j["start_table"] = std::move(table);
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::ConfigError, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return guarded("'" + path.string() + "'", [&] { return Json::parse(buf.str()); });
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
  out << text;
  require(out.good(), ErrorCode::ConfigError, "write to '" + path.string() + "' failed");
}

NetworkSpec load_network(const std::string& ref) { return network_from_json(resolve(ref, "networks")); }

DeviceSpec load_device(const std::string& ref) { return device_from_json(resolve(ref, "devices")); }

TilePlan load_plan(const std::string& ref, const ShapedNetwork& net) {
  return plan_from_json(resolve(ref, "plans"), net);
}

}  // namespace edgetrain
