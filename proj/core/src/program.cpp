// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/program.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <random>
#include <sstream>

namespace edgetrain {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

struct Span {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

// Builds one program; operands are registered on first use.
class Builder {
 public:
  Builder(Process process, const LayerSpec& layer, const ProgramOptions& opt)
      : l_(layer), opt_(opt) {
    prog_.process = process;
    prog_.kind = opt.kind;
    prog_.applicable = true;
  }

  std::uint32_t feature(const std::string& region, Dims4 dims,
                        std::optional<LayoutKind> kind = std::nullopt) {
    return add(region, FeatureLayout(kind.value_or(opt_.kind), dims, opt_.params));
  }
  std::uint32_t weights(const std::string& region) {
    return add(region, WeightLayout(opt_.kind, weight_dims(l_), opt_.params));
  }

  static Transfer xfer(Channel ch, std::uint32_t op, Box box) { return {ch, op, box}; }
  static Box fbox(std::int64_t b, Span ch, Span rows, Span cols) {
    return {{b, ch.lo, rows.lo, cols.lo}, {b + 1, ch.hi, rows.hi, cols.hi}};
  }
  Box wbox(Span m, Span n) const { return {{m.lo, n.lo, 0, 0}, {m.hi, n.hi, l_.K, l_.K}}; }

  Segment& segment() { return prog_.segments.emplace_back(); }

  LayerProgram finish() {
    std::erase_if(prog_.segments, [](const Segment& s) { return s.tiles.empty(); });
    AddressMap map;
    for (auto& op : prog_.operands) op.base = map.add(op.region, op.layout.words()).offset;
    return std::move(prog_);
  }

  const LayerSpec& layer() const { return l_; }
  const ProgramOptions& opt() const { return opt_; }

 private:
  std::uint32_t add(const std::string& region, OperandLayout layout) {
    for (std::uint32_t i = 0; i < prog_.operands.size(); ++i) {
      if (prog_.operands[i].region == region) return i;
    }
    prog_.operands.push_back({region, std::move(layout), 0});
    return static_cast<std::uint32_t>(prog_.operands.size() - 1);
  }

  const LayerSpec& l_;
  ProgramOptions opt_;
  LayerProgram prog_;
};

std::vector<Span> chunks(std::int64_t lo, std::int64_t hi, std::int64_t step) {
  std::vector<Span> out;
  for (std::int64_t v = lo; v < hi; v += step) out.push_back({v, std::min(hi, v + step)});
  return out;
}

struct Spatial {
  Span rows;
  Span cols;
  bool first = false;
};

std::vector<Spatial> spatial_tiles(std::int64_t rows, std::int64_t cols, const ProcessTile& t) {
  std::vector<Spatial> out;
  for (const Span& r : chunks(0, rows, t.tr)) {
    for (const Span& c : chunks(0, cols, t.tc)) out.push_back({r, c, out.empty()});
  }
  return out;
}

Cycles macs(const Spatial& s, std::int64_t K) {
  return (s.rows.hi - s.rows.lo) * (s.cols.hi - s.cols.lo) * K * K;
}

Span window(const LayerSpec& l, Process p, Span out, bool along_rows) {
  const auto [lo, hi] = input_window(l, p, out.lo, out.hi, along_rows);
  return {lo, hi};
}

// Conv/FC -------------------------------------------------------------------

void conv_fp(Builder& bld, const ProcessTile& t) {
  const LayerSpec& l = bld.layer();
  const auto& o = bld.opt();
  const std::int64_t B = o.batch;
  const std::int64_t tm = o.params.tm;
  const std::int64_t tn = o.params.tn;
  const auto in = bld.feature("act_in", {B, l.N, l.R_in, l.C_in});
  const auto w = bld.weights("weights");
  const auto out = bld.feature("act_out", {B, l.M, l.R, l.C});
  const auto tiles = spatial_tiles(l.R, l.C, t);
  const auto n_chunks = chunks(0, l.N, tn);

  auto make_tile = [&](std::int64_t b, Span m, const Spatial& s, bool load_weights,
                       bool all_inputs) {
    TileRun run;
    const Span rows = window(l, Process::FP, s.rows, true);
    const Span cols = window(l, Process::FP, s.cols, false);
    if (all_inputs) {
      // One step per (m-group, n-group) with the whole input tile loaded once.
      bool first = true;
      for (const Span& mm : chunks(0, l.M, tm)) {
        for (const Span& n : n_chunks) {
          Step st;
          if (first) st.loads.push_back(Builder::xfer(Channel::IFM, in, Builder::fbox(b, {0, l.N}, rows, cols)));
          st.loads.push_back(Builder::xfer(Channel::WEI, w, bld.wbox(mm, n)));
          st.compute = macs(s, l.K);
          run.steps.push_back(std::move(st));
          first = false;
        }
      }
      run.stores.push_back(Builder::xfer(Channel::OUT, out, Builder::fbox(b, {0, l.M}, s.rows, s.cols)));
      return run;
    }
    for (const Span& n : n_chunks) {
      Step st;
      st.loads.push_back(Builder::xfer(Channel::IFM, in, Builder::fbox(b, n, rows, cols)));
      if (load_weights) st.loads.push_back(Builder::xfer(Channel::WEI, w, bld.wbox(m, n)));
      st.compute = macs(s, l.K);
      run.steps.push_back(std::move(st));
    }
    run.stores.push_back(Builder::xfer(Channel::OUT, out, Builder::fbox(b, m, s.rows, s.cols)));
    return run;
  };

  switch (o.kind) {
    case LayoutKind::RESHAPED:
      for (const Span& blk : chunks(0, l.M, t.m_on)) {
        for (std::int64_t b = 0; b < B; ++b) {
          Segment& seg = bld.segment();
          for (const Span& m : chunks(blk.lo, blk.hi, tm)) {
            for (const Spatial& s : tiles) seg.tiles.push_back(make_tile(b, m, s, b == 0 && s.first, false));
          }
        }
      }
      break;
    case LayoutKind::BCHW:
      for (std::int64_t b = 0; b < B; ++b) {
        Segment& seg = bld.segment();
        for (const Spatial& s : tiles) {
          for (const Span& m : chunks(0, l.M, tm)) seg.tiles.push_back(make_tile(b, m, s, true, false));
        }
      }
      break;
    case LayoutKind::BHWC_REUSE:
      for (std::int64_t b = 0; b < B; ++b) {
        Segment& seg = bld.segment();
        for (const Spatial& s : tiles) seg.tiles.push_back(make_tile(b, {0, l.M}, s, true, true));
      }
      break;
  }
}

void conv_bp(Builder& bld, const ProcessTile& t) {
  const LayerSpec& l = bld.layer();
  const auto& o = bld.opt();
  const std::int64_t B = o.batch;
  const std::int64_t tm = o.params.tm;
  const std::int64_t tn = o.params.tn;
  const auto in = bld.feature("loss_out", {B, l.M, l.R, l.C});
  const auto w = bld.weights("weights");
  const auto out = bld.feature("loss_in", {B, l.N, l.R_in, l.C_in});
  const auto tiles = spatial_tiles(l.R_in, l.C_in, t);
  const auto m_chunks = chunks(0, l.M, tn);

  auto rows_of = [&](const Spatial& s) { return window(l, Process::BP, s.rows, true); };
  auto cols_of = [&](const Spatial& s) { return window(l, Process::BP, s.cols, false); };

  switch (o.kind) {
    case LayoutKind::RESHAPED:
      for (const Span& blk : chunks(0, l.N, t.m_on)) {
        for (std::int64_t b = 0; b < B; ++b) {
          Segment& seg = bld.segment();
          bool first_tile = true;
          for (const Span& n : chunks(blk.lo, blk.hi, tm)) {
            for (const Spatial& s : tiles) {
              TileRun run;
              for (const Span& m : m_chunks) {
                Step st;
                st.loads.push_back(Builder::xfer(Channel::IFM, in, Builder::fbox(b, m, rows_of(s), cols_of(s))));
                // The whole block of weights arrives with the first tile.
                if (b == 0 && first_tile) st.loads.push_back(Builder::xfer(Channel::WEI, w, bld.wbox(m, blk)));
                st.compute = macs(s, l.K);
                run.steps.push_back(std::move(st));
              }
              run.stores.push_back(Builder::xfer(Channel::OUT, out, Builder::fbox(b, n, s.rows, s.cols)));
              seg.tiles.push_back(std::move(run));
              first_tile = false;
            }
          }
        }
      }
      break;
    case LayoutKind::BCHW:
      for (std::int64_t b = 0; b < B; ++b) {
        Segment& seg = bld.segment();
        for (const Spatial& s : tiles) {
          for (const Span& n : chunks(0, l.N, tm)) {
            TileRun run;
            for (const Span& m : m_chunks) {
              Step st;
              st.loads.push_back(Builder::xfer(Channel::IFM, in, Builder::fbox(b, m, rows_of(s), cols_of(s))));
              st.loads.push_back(Builder::xfer(Channel::WEI, w, bld.wbox(m, n)));
              st.compute = macs(s, l.K);
              run.steps.push_back(std::move(st));
            }
            run.stores.push_back(Builder::xfer(Channel::OUT, out, Builder::fbox(b, n, s.rows, s.cols)));
            seg.tiles.push_back(std::move(run));
          }
        }
      }
      break;
    case LayoutKind::BHWC_REUSE:
      for (std::int64_t b = 0; b < B; ++b) {
        Segment& seg = bld.segment();
        for (const Spatial& s : tiles) {
          TileRun run;
          bool first = true;
          for (const Span& n : chunks(0, l.N, tm)) {
            for (const Span& m : m_chunks) {
              Step st;
              if (first) st.loads.push_back(Builder::xfer(Channel::IFM, in, Builder::fbox(b, {0, l.M}, rows_of(s), cols_of(s))));
              st.loads.push_back(Builder::xfer(Channel::WEI, w, bld.wbox(m, n)));
              st.compute = macs(s, l.K);
              run.steps.push_back(std::move(st));
              first = false;
            }
          }
          run.stores.push_back(Builder::xfer(Channel::OUT, out, Builder::fbox(b, {0, l.N}, s.rows, s.cols)));
          seg.tiles.push_back(std::move(run));
        }
      }
      break;
  }
}

void conv_wu(Builder& bld, const ProcessTile& t) {
  const LayerSpec& l = bld.layer();
  const auto& o = bld.opt();
  const std::int64_t B = o.batch;
  const std::int64_t tm = o.params.tm;
  const std::int64_t tn = o.params.tn;
  const auto in = bld.feature("act_in", {B, l.N, l.R_in, l.C_in});
  const auto lo = bld.feature("loss_out", {B, l.M, l.R, l.C});
  const auto w = bld.weights("weights");
  const auto tiles = spatial_tiles(l.R, l.C, t);
  const auto n_chunks = chunks(0, l.N, tn);
  const bool resident = l.R <= t.tr && l.C <= t.tc;
  const Span all_rows = window(l, Process::WU, {0, l.R}, true);
  const Span all_cols = window(l, Process::WU, {0, l.C}, false);

  auto write_back = [&](std::vector<Transfer>& dst, Span m, Span n) {
    dst.push_back(Builder::xfer(Channel::OUT, w, bld.wbox(m, n)));
    dst.push_back(Builder::xfer(Channel::WEI, w, bld.wbox(m, n)));
  };

  // Row tiles innermost: one sweep per (image, m-group, n-group).
  auto sweeps = [&](Segment& seg, Span blk, std::int64_t b) {
    for (const Span& m : chunks(blk.lo, blk.hi, tm)) {
      for (const Span& n : n_chunks) {
        TileRun run;
        for (const Spatial& s : tiles) {
          Step st;
          st.loads.push_back(Builder::xfer(
              Channel::IFM, in,
              Builder::fbox(b, n, window(l, Process::WU, s.rows, true), window(l, Process::WU, s.cols, false))));
          st.loads.push_back(Builder::xfer(Channel::OFM, lo, Builder::fbox(b, m, s.rows, s.cols)));
          st.compute = macs(s, l.K);
          run.steps.push_back(std::move(st));
        }
        if (b == B - 1) write_back(run.stores, m, n);
        seg.tiles.push_back(std::move(run));
      }
    }
  };

  const Spatial whole{{0, l.R}, {0, l.C}, true};
  switch (o.kind) {
    case LayoutKind::RESHAPED:
      for (const Span& blk : chunks(0, l.M, t.m_on)) {
        if (!resident) {
          Segment& seg = bld.segment();
          for (std::int64_t b = 0; b < B; ++b) sweeps(seg, blk, b);
          continue;
        }
        for (const Span& m : chunks(blk.lo, blk.hi, tm)) {
          Segment& seg = bld.segment();
          for (std::int64_t b = 0; b < B; ++b) {
            TileRun run;
            for (const Span& n : n_chunks) {
              Step st;
              st.loads.push_back(Builder::xfer(Channel::IFM, in, Builder::fbox(b, n, all_rows, all_cols)));
              if (n.lo == 0) st.loads.push_back(Builder::xfer(Channel::OFM, lo, Builder::fbox(b, m, {0, l.R}, {0, l.C})));
              st.compute = macs(whole, l.K);
              if (b == B - 1) write_back(st.serial, m, n);
              run.steps.push_back(std::move(st));
            }
            seg.tiles.push_back(std::move(run));
          }
        }
      }
      break;
    case LayoutKind::BCHW: {
      Segment& seg = bld.segment();
      for (std::int64_t b = 0; b < B; ++b) sweeps(seg, {0, l.M}, b);
      break;
    }
    case LayoutKind::BHWC_REUSE: {
      Segment& seg = bld.segment();
      if (!resident) {
        for (std::int64_t b = 0; b < B; ++b) sweeps(seg, {0, l.M}, b);
        break;
      }
      for (std::int64_t b = 0; b < B; ++b) {
        TileRun run;
        bool first = true;
        for (const Span& m : chunks(0, l.M, tm)) {
          for (const Span& n : n_chunks) {
            Step st;
            if (first) {
              st.loads.push_back(Builder::xfer(Channel::IFM, in, Builder::fbox(b, {0, l.N}, all_rows, all_cols)));
              st.loads.push_back(Builder::xfer(Channel::OFM, lo, Builder::fbox(b, {0, l.M}, {0, l.R}, {0, l.C})));
            }
            st.compute = macs(whole, l.K);
            if (b == B - 1) write_back(st.serial, m, n);
            run.steps.push_back(std::move(st));
            first = false;
          }
        }
        seg.tiles.push_back(std::move(run));
      }
      break;
    }
  }
}

// Pooling and batch norm stream channel groups row tile by row tile ---------

void pool_program(Builder& bld, Process p, const ProcessTile& t) {
  const LayerSpec& l = bld.layer();
  const auto& o = bld.opt();
  const std::int64_t B = o.batch;
  const bool is_max = l.kind == LayerKind::MaxPool;
  const Dims4 in_dims{B, l.N, l.R_in, l.C_in};
  const Dims4 out_dims{B, l.M, l.R, l.C};
  const auto groups = chunks(0, l.M, o.params.tm);
  const auto rows = chunks(0, l.R, t.tr);
  const Span cols{0, l.C};
  const Span in_cols{0, l.C_in};
  if (p == Process::FP) {
    const auto in = bld.feature("act_in", in_dims);
    const auto out = bld.feature("act_out", out_dims);
    const std::optional<std::uint32_t> idx =
        is_max ? std::optional(bld.feature("pool_index", out_dims)) : std::nullopt;
    for (std::int64_t b = 0; b < B; ++b) {
      Segment& seg = bld.segment();
      for (const Span& g : groups) {
        for (const Span& r : rows) {
          TileRun run;
          Step st;
          st.loads.push_back(Builder::xfer(Channel::IFM, in, Builder::fbox(b, g, window(l, p, r, true), in_cols)));
          st.compute = (r.hi - r.lo) * l.C * l.K * l.K;
          run.steps.push_back(std::move(st));
          run.stores.push_back(Builder::xfer(Channel::OUT, out, Builder::fbox(b, g, r, cols)));
          if (idx) run.stores.push_back(Builder::xfer(Channel::OUT, *idx, Builder::fbox(b, g, r, cols)));
          seg.tiles.push_back(std::move(run));
        }
      }
    }
    return;
  }
  const auto in = bld.feature("loss_out", out_dims);
  const std::optional<std::uint32_t> idx =
      is_max ? std::optional(bld.feature("pool_index", out_dims)) : std::nullopt;
  const auto out = bld.feature("loss_in", in_dims);
  for (std::int64_t b = 0; b < B; ++b) {
    Segment& seg = bld.segment();
    for (const Span& g : groups) {
      for (const Span& r : rows) {
        TileRun run;
        Step st;
        st.loads.push_back(Builder::xfer(Channel::IFM, in, Builder::fbox(b, g, r, cols)));
        if (idx) st.loads.push_back(Builder::xfer(Channel::WEI, *idx, Builder::fbox(b, g, r, cols)));
        st.compute = (r.hi - r.lo) * l.C * l.K * l.K;
        run.steps.push_back(std::move(st));
        run.stores.push_back(Builder::xfer(Channel::OUT, out, Builder::fbox(b, g, window(l, Process::FP, r, true), in_cols)));
        seg.tiles.push_back(std::move(run));
      }
    }
  }
}

void bn_program(Builder& bld, Process p, const ProcessTile& t) {
  const LayerSpec& l = bld.layer();
  const auto& o = bld.opt();
  const std::int64_t B = o.batch;
  const Dims4 dims{B, l.M, l.R, l.C};
  const auto groups = chunks(0, l.M, o.params.tm);
  const auto rows = chunks(0, l.R, t.tr);
  const Span cols{0, l.C};
  const bool fp = p == Process::FP;
  const auto first_in = bld.feature(fp ? "act_in" : "ahat", dims);
  const std::optional<std::uint32_t> second_in =
      fp ? std::nullopt : std::optional(bld.feature("loss_out", dims));
  const auto params = bld.feature("bn_params", {1, 1, 1, 3 * l.M}, LayoutKind::BCHW);
  const auto out = bld.feature(fp ? "act_out" : "loss_in", dims);
  const std::optional<std::uint32_t> ahat =
      fp ? std::optional(bld.feature("ahat", dims)) : std::nullopt;

  // Statistics pass, then the normalizing pass that writes results.
  Segment& seg = bld.segment();
  bool first = true;
  for (int pass = 0; pass < 2; ++pass) {
    for (std::int64_t b = 0; b < B; ++b) {
      for (const Span& g : groups) {
        for (const Span& r : rows) {
          TileRun run;
          Step st;
          if (first) st.loads.push_back(Builder::xfer(Channel::WEI, params, Box{{0, 0, 0, 0}, {1, 1, 1, 3 * l.M}}));
          first = false;
          st.loads.push_back(Builder::xfer(Channel::IFM, first_in, Builder::fbox(b, g, r, cols)));
          if (second_in) st.loads.push_back(Builder::xfer(Channel::OFM, *second_in, Builder::fbox(b, g, r, cols)));
          st.compute = (r.hi - r.lo) * l.C;
          run.steps.push_back(std::move(st));
          if (pass == 1) {
            run.stores.push_back(Builder::xfer(Channel::OUT, out, Builder::fbox(b, g, r, cols)));
            if (ahat) run.stores.push_back(Builder::xfer(Channel::OUT, *ahat, Builder::fbox(b, g, r, cols)));
          }
          seg.tiles.push_back(std::move(run));
        }
      }
    }
  }
}

}  // namespace

std::pair<std::int64_t, std::int64_t> input_window(const LayerSpec& l, Process p,
                                                   std::int64_t r0, std::int64_t r1,
                                                   bool along_rows) {
  const std::int64_t extent = along_rows ? (p == Process::BP ? l.R : l.R_in)
                                         : (p == Process::BP ? l.C : l.C_in);
  if (p == Process::BP) {
    // Loss rows r with r*S + kr - pad inside [r0, r1) for some kr.
    const std::int64_t lo = floor_div(r0 + l.pad - l.K, l.S) + 1;
    const std::int64_t hi = floor_div(r1 - 1 + l.pad, l.S) + 1;
    return {std::clamp<std::int64_t>(lo, 0, extent), std::clamp<std::int64_t>(hi, 0, extent)};
  }
  const std::int64_t lo = r0 * l.S - l.pad;
  const std::int64_t hi = (r1 - 1) * l.S - l.pad + l.K;
  return {std::clamp<std::int64_t>(lo, 0, extent), std::clamp<std::int64_t>(hi, 0, extent)};
}

LayerProgram build_program(Process process, const LayerSpec& layer, const LayerTilePlan& tiles,
                           const ProgramOptions& options) {
  LayerProgram empty;
  empty.process = process;
  empty.kind = options.kind;
  if (!process_applicable(layer, process, options.first_conv)) return empty;
  require(options.batch >= 1, ErrorCode::InvalidPlan, "batch must be >= 1");
  Builder bld(process, layer, options);
  if (layer.conv_like()) {
    const ProcessTile& t = tiles.at(process);
    validate_tile(layer, process, t, options.params.tm);
    switch (process) {
      case Process::FP: conv_fp(bld, t); break;
      case Process::BP: conv_bp(bld, t); break;
      case Process::WU: conv_wu(bld, t); break;
    }
  } else {
    // Pooling and BN tile over output rows in both directions.
    const ProcessTile& t = tiles.fp;
    validate_tile(layer, Process::FP, t, options.params.tm);
    if (layer.pooling()) {
      pool_program(bld, process, t);
    } else {
      bn_program(bld, process, t);
    }
  }
  return bld.finish();
}

std::vector<ChannelTrace> trace_program(const LayerProgram& program) {
  std::array<ChannelTrace, 4> traces;
  for (Channel ch : kChannels) traces[static_cast<std::size_t>(ch)].channel = ch;
  program.for_each_transfer([&](const Transfer& t) {
    const Operand& op = program.operands[t.operand];
    auto& addrs = traces[static_cast<std::size_t>(t.channel)].addrs;
    op.layout.for_each_run(t.box, [&](std::uint64_t start, std::uint64_t len) {
      for (std::uint64_t a = 0; a < len; ++a) addrs.push_back(op.base + start + a);
    });
  });
  std::vector<ChannelTrace> out;
  for (auto& t : traces) {
    if (!t.addrs.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::vector<ChannelTrace> trace_layer(Process process, const LayerSpec& layer,
                                      const LayerTilePlan& tiles, const ProgramOptions& options) {
  return trace_program(build_program(process, layer, tiles, options));
}

std::string network_region(const std::string& local, std::size_t i) {
  const std::string idx = std::to_string(i);
  const std::string next = std::to_string(i + 1);
  if (local == "act_in") return "act" + idx;
  if (local == "act_out") return "act" + next;
  if (local == "loss_in") return "loss" + idx;
  if (local == "loss_out") return "loss" + next;
  if (local == "weights") return "w" + idx;
  if (local == "ahat") return "ahat" + idx;
  if (local == "bn_params") return "bn" + idx;
  if (local == "pool_index") return "pidx" + idx;
  fail(ErrorCode::InvariantViolation, "unknown operand region '" + local + "'");
}

NetworkLayout build_network_layout(const ShapedNetwork& net, const TilePlan& plan,
                                   LayoutKind kind, std::int64_t align) {
  validate_plan(plan, net);
  NetworkLayout out;
  out.programs.resize(net.size());
  const auto first = net.first_conv_like();
  std::map<std::string, std::uint64_t> sizes;
  for (std::size_t i = 0; i < net.size(); ++i) {
    ProgramOptions opt{kind, layout_params(plan, align), net.batch(), first == i};
    for (Process p : kProcesses) {
      auto& prog = out.programs[i][static_cast<std::size_t>(p)];
      prog = build_program(p, net.layer(i), plan.layers[i], opt);
      for (auto& op : prog.operands) {
        op.region = network_region(op.region, i);
        auto& size = sizes[op.region];
        size = std::max(size, op.layout.words());
      }
    }
  }
  // Activations first, then parameters, then backward buffers.
  std::vector<std::string> order;
  auto take = [&](const std::string& name) {
    if (sizes.count(name) != 0 && std::find(order.begin(), order.end(), name) == order.end())
      order.push_back(name);
  };
  for (std::size_t i = 0; i <= net.size(); ++i) {
    take("act" + std::to_string(i));
    take("ahat" + std::to_string(i));
    take("pidx" + std::to_string(i));
  }
  for (std::size_t i = 0; i < net.size(); ++i) {
    take("w" + std::to_string(i));
    take("bn" + std::to_string(i));
  }
  for (std::size_t i = 0; i <= net.size(); ++i) take("loss" + std::to_string(i));
  for (const auto& name : order) out.map.add(name, sizes.at(name));
  require(out.map.total_words() <= (std::uint64_t{1} << 32), ErrorCode::RegionOverflow,
          "network image needs " + std::to_string(out.map.total_words()) +
              " words, beyond the 32-bit word address space");
  for (auto& layer_progs : out.programs) {
    for (auto& prog : layer_progs) {
      for (auto& op : prog.operands) {
        const Region& r = out.map.at(op.region);
        require(op.layout.words() <= r.length, ErrorCode::RegionOverflow,
                "operand overflows region '" + r.name + "'");
        op.base = r.offset;
      }
    }
  }
  return out;
}

std::vector<StartEntry> dma_start_table(const ShapedNetwork& net, const TilePlan& plan,
                                        LayoutKind kind, std::int64_t align) {
  const NetworkLayout nl = build_network_layout(net, plan, kind, align);
  std::vector<StartEntry> out;
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (Process p : kProcesses) {
      const LayerProgram& prog = nl.programs[i][static_cast<std::size_t>(p)];
      if (!prog.applicable) continue;
      std::array<std::optional<StartEntry>, 4> seen;
      prog.for_each_transfer([&](const Transfer& t) {
        auto& slot = seen[static_cast<std::size_t>(t.channel)];
        if (slot) return;
        const Operand& op = prog.operands[t.operand];
        std::uint64_t first_word = 0;
        bool found = false;
        op.layout.for_each_run(t.box, [&](std::uint64_t start, std::uint64_t) {
          if (!found) first_word = op.base + start;
          found = true;
        });
        slot = StartEntry{i, net.layer(i).name, p, t.channel, op.region, op.base, first_word};
      });
      for (auto& e : seen) {
        if (e) out.push_back(std::move(*e));
      }
    }
  }
  return out;
}

ReadCheck verify_program_reads(const LayerProgram& program, const DramImage& image,
                               const std::vector<const Tensor*>& tensors,
                               std::vector<Tensor>* rebuilt) {
  require(tensors.size() == program.operands.size(), ErrorCode::ShapeMismatch,
          "one tensor slot per operand expected");
  ReadCheck res;
  std::ostringstream report;
  const auto words = image.words();
  auto check = [&](const Transfer& t) {
    const Tensor* ref = tensors[t.operand];
    if (ref == nullptr) return;
    const Operand& op = program.operands[t.operand];
    // On-chip tile in canonical (row-major box) order.
    const Coord4 ext{t.box.hi[0] - t.box.lo[0], t.box.hi[1] - t.box.lo[1],
                     t.box.hi[2] - t.box.lo[2], t.box.hi[3] - t.box.lo[3]};
    std::vector<float> tile(static_cast<std::size_t>(t.box.count()), 0.0f);
    std::vector<char> filled(tile.size(), 0);
    op.layout.for_each_word(t.box, [&](std::uint64_t a, const Coord4& c, bool pad) {
      if (pad) return;
      const std::int64_t k = (((c[0] - t.box.lo[0]) * ext[1] + (c[1] - t.box.lo[1])) * ext[2] +
                              (c[2] - t.box.lo[2])) * ext[3] + (c[3] - t.box.lo[3]);
      tile[static_cast<std::size_t>(k)] = std::bit_cast<float>(words[op.base + a]);
      filled[static_cast<std::size_t>(k)] = 1;
    });
    ++res.tiles;
    std::int64_t k = 0;
    for (std::int64_t a = t.box.lo[0]; a < t.box.hi[0]; ++a)
      for (std::int64_t b = t.box.lo[1]; b < t.box.hi[1]; ++b)
        for (std::int64_t c = t.box.lo[2]; c < t.box.hi[2]; ++c)
          for (std::int64_t d = t.box.lo[3]; d < t.box.hi[3]; ++d, ++k) {
            const float want = (*ref)(a, b, c, d);
            const float got = tile[static_cast<std::size_t>(k)];
            if (!filled[static_cast<std::size_t>(k)] ||
                std::bit_cast<std::uint32_t>(got) != std::bit_cast<std::uint32_t>(want)) {
              if (res.mismatches < 8) {
                report << op.region << " " << to_string(t.channel) << " (" << a << "," << b << ","
                       << c << "," << d << "): tile holds " << got << ", tensor " << want << "\n";
              }
              ++res.mismatches;
            }
            if (rebuilt != nullptr) (*rebuilt)[t.operand](a, b, c, d) = got;
          }
  };
  for (const auto& seg : program.segments)
    for (const auto& tile : seg.tiles)
      for (const auto& step : tile.steps) {
        for (const auto& t : step.loads) check(t);
        // Write-back transfers on the read channel fetch the stored weights.
        for (const auto& t : step.serial) {
          if (t.channel != Channel::OUT) check(t);
        }
      }
  for (const auto& seg : program.segments)
    for (const auto& tile : seg.tiles)
      for (const auto& t : tile.stores) {
        if (t.channel != Channel::OUT) check(t);
      }
  res.ok = res.mismatches == 0;
  res.report = report.str();
  return res;
}

ReadCheck equivalence_check(const LayerSpec& layer, const LayerTilePlan& tiles,
                            const LayoutParams& params, LayoutKind a, LayoutKind b,
                            Process process, std::int64_t batch, std::uint64_t seed) {
  ReadCheck total;
  std::vector<std::vector<Tensor>> rebuilt_per_kind;
  std::vector<Tensor> sources;
  for (LayoutKind kind : {a, b}) {
    const LayerProgram prog = build_program(process, layer, tiles, {kind, params, batch, false});
    if (!prog.applicable) return total;
    AddressMap map;
    for (const auto& op : prog.operands) map.add(op.region, op.layout.words());
    DramImage image(map);
    if (sources.empty()) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
      for (const auto& op : prog.operands) {
        Tensor t(op.layout.dims());
        for (float& v : t.data()) v = dist(rng);
        sources.push_back(std::move(t));
      }
    }
    std::vector<const Tensor*> refs;
    std::vector<Tensor> rebuilt;
    for (std::size_t i = 0; i < prog.operands.size(); ++i) {
      pack(sources[i], prog.operands[i].layout, image, map.regions()[i]);
      refs.push_back(&sources[i]);
      rebuilt.emplace_back(sources[i].dims());
    }
    ReadCheck rc = verify_program_reads(prog, image, refs, &rebuilt);
    total.tiles += rc.tiles;
    total.mismatches += rc.mismatches;
    if (!rc.ok) total.report += std::string(to_string(kind)) + ":\n" + rc.report;
    rebuilt_per_kind.push_back(std::move(rebuilt));
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (rebuilt_per_kind[0][i] != rebuilt_per_kind[1][i]) {
      ++total.mismatches;
      total.report += "operand " + std::to_string(i) + " reconstructs differently\n";
    }
  }
  total.ok = total.mismatches == 0;
  return total;
}

}  // namespace edgetrain
