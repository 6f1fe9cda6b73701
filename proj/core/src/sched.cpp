// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/sched.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <tuple>

#include "edgetrain/perf.hpp"

namespace edgetrain {

namespace {

std::int64_t banks_for(std::int64_t elements, const DeviceSpec& dev) {
  return ceil_div(elements * dev.bits_per_word, dev.bram_usable_bits);
}

std::int64_t in_extent(std::int64_t tile, const LayerSpec& l) { return (tile - 1) * l.S + l.K; }

struct Budget {
  std::int64_t dsps = 0;
  std::int64_t brams = 0;
  // Largest double-buffered bank count that passed a fit test; a run under
  // any budget in (admitted, brams] makes identical decisions.
  mutable std::int64_t admitted = -1;
};

bool fits(std::int64_t ifm, std::int64_t ofm, std::int64_t wei, const Budget& budget) {
  const std::int64_t need = 2 * (ifm + ofm + wei);
  if (need >= budget.brams) return false;
  budget.admitted = std::max(budget.admitted, need);
  return true;
}

std::vector<std::size_t> conv_layers(const ShapedNetwork& net) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.layer(i).conv_like()) out.push_back(i);
  }
  return out;
}

std::vector<Process> processes_of(const ShapedNetwork& net, std::size_t i) {
  std::vector<Process> out;
  for (Process p : kProcesses) {
    if (process_applicable(net.layer(i), p, net.first_conv_like() == i)) out.push_back(p);
  }
  return out;
}

// Single-row buffers for the layer with the largest output map.
std::pair<std::int64_t, std::int64_t> lower_bounds(const ShapedNetwork& net, std::int64_t T,
                                                   const DeviceSpec& dev) {
  const LayerSpec* widest = nullptr;
  for (std::size_t i : conv_layers(net)) {
    const LayerSpec& l = net.layer(i);
    if (widest == nullptr || l.R * l.C > widest->R * widest->C) widest = &l;
  }
  if (widest == nullptr) return {0, 0};
  const ProcessTile row{1, widest->C, widest->M};
  return {ifm_banks(*widest, Process::FP, row, T, dev), ofm_banks(*widest, Process::FP, row, T, dev)};
}

// Smallest multiple-of-T block not below ceil(M / l), growing l until it fits.
std::int64_t choose_block(const LayerSpec& l, Process p, std::int64_t T, std::int64_t inf_ifm,
                          std::int64_t inf_ofm, const DeviceSpec& dev, const Budget& budget) {
  const std::int64_t channels = process_geometry(l, p).out_ch;
  std::int64_t m_on = channels;
  for (std::int64_t parts = 1;; ++parts) {
    m_on = std::min(channels, round_up(ceil_div(channels, parts), T));
    if (fits(inf_ifm, inf_ofm, wei_banks(l, p, m_on, T, dev), budget)) return m_on;
    if (m_on <= T) {
      fail(ErrorCode::Infeasible, "weights of layer '" + l.name +
                                      "' do not fit even one channel tile on chip");
    }
  }
}

bool tile_fits_feasible(const ShapedNetwork& net, std::int64_t T, const DeviceSpec& dev,
                        const Budget& budget) {
  const auto [inf_ifm, inf_ofm] = lower_bounds(net, T, dev);
  for (std::size_t i : conv_layers(net)) {
    for (Process p : processes_of(net, i)) {
      const std::int64_t smallest = std::min(T, process_geometry(net.layer(i), p).out_ch);
      if (!fits(inf_ifm, inf_ofm, wei_banks(net.layer(i), p, smallest, T, dev), budget)) return false;
    }
  }
  return true;
}

std::int64_t largest_row_tile(const LayerSpec& l, std::int64_t T, const DeviceSpec& dev,
                              std::int64_t ifm_cap, std::int64_t ofm_cap) {
  for (std::int64_t tr = l.R; tr > 1; --tr) {
    const ProcessTile t{tr, l.C, l.M};
    if (ifm_banks(l, Process::FP, t, T, dev) <= ifm_cap &&
        ofm_banks(l, Process::FP, t, T, dev) <= ofm_cap)
      return tr;
  }
  return 1;
}

}  // namespace

std::int64_t ifm_banks(const LayerSpec& l, Process p, const ProcessTile& t,
                       std::int64_t tile_channels, const DeviceSpec& dev) {
  (void)p;
  return tile_channels * banks_for(in_extent(t.tr, l) * in_extent(t.tc, l), dev);
}

std::int64_t ofm_banks(const LayerSpec& l, Process p, const ProcessTile& t,
                       std::int64_t tile_channels, const DeviceSpec& dev) {
  (void)l;
  (void)p;
  return tile_channels * banks_for(t.tr * t.tc, dev);
}

std::int64_t wei_banks(const LayerSpec& l, Process p, std::int64_t m_on,
                       std::int64_t tile_channels, const DeviceSpec& dev) {
  const ProcessGeometry g = process_geometry(l, p);
  const std::int64_t T = tile_channels;
  return T * T *
         banks_for(l.K * l.K * ceil_div(g.in_ch, 2 * T) * ceil_div(m_on, T), dev);
}

ResourceUsage resource_usage(const TilePlan& plan, const ShapedNetwork& net,
                             const DeviceSpec& dev) {
  validate_plan(plan, net);
  require(plan.tm == plan.tn, ErrorCode::InvalidPlan, "resource model assumes Tm = Tn");
  ResourceUsage u;
  u.d_conv = dev.dsps_per_mac * plan.tm * plan.tn;
  for (std::size_t i : conv_layers(net)) {
    const LayerSpec& l = net.layer(i);
    for (Process p : processes_of(net, i)) {
      const ProcessTile& t = plan.layers[i].at(p);
      u.b_ifm = std::max(u.b_ifm, ifm_banks(l, p, t, plan.tn, dev));
      u.b_ofm = std::max(u.b_ofm, ofm_banks(l, p, t, plan.tm, dev));
      u.b_wei = std::max(u.b_wei, wei_banks(l, p, t.m_on, plan.tm, dev));
    }
  }
  u.b_conv = 2 * (u.b_ifm + u.b_ofm + u.b_wei);
  return u;
}

namespace {

// Row-tile scores at one channel tile, shared by passes at different budgets.
class ScoreCache {
 public:
  ScoreCache(const DeviceSpec& dev, std::int64_t T, std::int64_t batch)
      : dev_(dev), T_(T), batch_(batch) {}

  Cycles operator()(std::size_t layer, const LayerSpec& l, Process p, const ProcessTile& t) {
    const Key key{layer, p, t.tr, t.tc, t.m_on};
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Cycles c = 0;
    switch (p) {
      case Process::FP: c = fp_latency(l, t, T_, dev_, batch_).cycles; break;
      case Process::BP: c = bp_latency(l, t, T_, dev_, batch_).cycles; break;
      case Process::WU: c = wu_latency(l, t, T_, dev_, batch_).cycles; break;
    }
    cache_.emplace(key, c);
    return c;
  }

 private:
  using Key = std::tuple<std::size_t, Process, std::int64_t, std::int64_t, std::int64_t>;
  const DeviceSpec& dev_;
  std::int64_t T_;
  std::int64_t batch_;
  std::map<Key, Cycles> cache_;
};

// One pass of the resource-scheduling algorithm at a fixed channel tile.
Schedule plan_for_tile(const ShapedNetwork& net, std::int64_t T, const DeviceSpec& dev,
                       const Budget& budget, ScoreCache& score_of) {
  Schedule out;
  out.plan = default_plan(net, T);
  const auto [inf_ifm, inf_ofm] = lower_bounds(net, T, dev);
  require(fits(inf_ifm, inf_ofm, 0, budget), ErrorCode::Infeasible,
          "single-row feature buffers exceed the BRAM budget");

  std::int64_t b_wei = 0;
  for (std::size_t i : conv_layers(net)) {
    for (Process p : processes_of(net, i)) {
      const std::int64_t m_on = choose_block(net.layer(i), p, T, inf_ifm, inf_ofm, dev, budget);
      out.plan.layers[i].at(p).m_on = m_on;
      b_wei = std::max(b_wei, wei_banks(net.layer(i), p, m_on, T, dev));
    }
  }

  std::int64_t b_ifm = inf_ifm;
  std::int64_t b_ofm = inf_ofm;
  const auto first = net.first_conv_like();
  for (std::size_t i : conv_layers(net)) {
    const LayerSpec& l = net.layer(i);
    LayerTilePlan& lp = out.plan.layers[i];
    // FP and WU share output geometry; BP tiles the input extent.
    for (const bool backward : {false, true}) {
      if (backward && first == i) continue;
      const Process shape = backward ? Process::BP : Process::FP;
      const ProcessGeometry g = process_geometry(l, shape);
      Cycles best = std::numeric_limits<Cycles>::max();
      ProcessTile chosen_fp = lp.fp;
      ProcessTile chosen_wu = lp.wu;
      ProcessTile chosen_bp = lp.bp;
      std::int64_t chosen_ifm = b_ifm;
      std::int64_t chosen_ofm = b_ofm;
      for (std::int64_t tr = 1; tr <= g.out_rows; ++tr) {
        ProcessTile fp{tr, g.out_cols, lp.fp.m_on};
        ProcessTile wu{tr, g.out_cols, lp.wu.m_on};
        ProcessTile bp{tr, g.out_cols, lp.bp.m_on};
        std::int64_t need_ifm = b_ifm;
        std::int64_t need_ofm = b_ofm;
        Cycles score = 0;
        if (backward) {
          need_ifm = std::max(need_ifm, ifm_banks(l, Process::BP, bp, T, dev));
          need_ofm = std::max(need_ofm, ofm_banks(l, Process::BP, bp, T, dev));
        } else {
          for (Process p : {Process::FP, Process::WU}) {
            const ProcessTile& t = p == Process::FP ? fp : wu;
            need_ifm = std::max(need_ifm, ifm_banks(l, p, t, T, dev));
            need_ofm = std::max(need_ofm, ofm_banks(l, p, t, T, dev));
          }
        }
        if (!fits(need_ifm, need_ofm, b_wei, budget)) continue;
        if (backward) {
          score = score_of(i, l, Process::BP, bp);
        } else {
          score = score_of(i, l, Process::FP, fp) + score_of(i, l, Process::WU, wu);
        }
        if (score < best) {
          best = score;
          chosen_fp = fp;
          chosen_wu = wu;
          chosen_bp = bp;
          chosen_ifm = need_ifm;
          chosen_ofm = need_ofm;
        }
      }
      require(best != std::numeric_limits<Cycles>::max(), ErrorCode::Infeasible,
              "no row tile of layer '" + l.name + "' fits the BRAM budget");
      if (backward) {
        lp.bp = chosen_bp;
      } else {
        lp.fp = chosen_fp;
        lp.wu = chosen_wu;
      }
      b_ifm = chosen_ifm;
      b_ofm = chosen_ofm;
    }
  }

  out.plan.banks = BufferBanks{b_ifm, b_ofm, b_wei};
  for (std::size_t i : conv_layers(net)) {
    for (Process p : processes_of(net, i))
      out.predicted_cycles += score_of(i, net.layer(i), p, out.plan.layers[i].at(p));
  }
  return out;
}

// Streaming layers take the tallest row tile the feature buffers hold.
void finish_plan(const ShapedNetwork& net, const DeviceSpec& dev, Schedule& s) {
  const BufferBanks caps = *s.plan.banks;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerSpec& l = net.layer(i);
    if (l.conv_like()) continue;
    s.plan.layers[i].fp.tr = largest_row_tile(l, s.plan.tm, dev, caps.ifm, caps.ofm);
  }
  s.resources = resource_usage(s.plan, net, dev);
  s.plan.banks = BufferBanks{s.resources.b_ifm, s.resources.b_ofm, s.resources.b_wei};
}

}  // namespace

Schedule schedule(const ShapedNetwork& net, const DeviceSpec& dev, std::int64_t batch) {
  dev.validate();
  require(batch >= 1, ErrorCode::InvalidLayer, "batch must be >= 1");
  const Budget budget{dev.dsp_budget(), dev.bram_budget()};

  // Channel tiles that fit the DSP budget and leave room for the smallest
  // weight block next to single-row feature buffers, largest first.
  std::vector<std::int64_t> tiles;
  for (std::int64_t cand = 1; dev.dsps_per_mac * cand * cand <= budget.dsps; ++cand) {
    if (tile_fits_feasible(net, cand, dev, budget)) tiles.insert(tiles.begin(), cand);
  }
  require(!tiles.empty(), ErrorCode::Infeasible, "no channel tile fits the DSP and BRAM budgets");

  // The best pass over every admissible tile and every tighter bank budget,
  // visiting only budgets at which the pass changes its decisions. Ties keep
  // the larger tile and the larger budget.
  std::optional<Schedule> best;
  std::optional<Error> first_failure;
  for (std::int64_t T : tiles) {
    if (best) {
      Cycles floor = 0;
      for (std::size_t i : conv_layers(net)) {
        for (Process p : processes_of(net, i)) floor += compute_floor(net.layer(i), p, T, batch);
      }
      if (floor >= best->predicted_cycles) continue;
    }
    ScoreCache score_of(dev, T, batch);
    for (std::int64_t brams = budget.brams; brams > 0;) {
      const Budget trial{budget.dsps, brams};
      try {
        Schedule s = plan_for_tile(net, T, dev, trial, score_of);
        if (!best || s.predicted_cycles < best->predicted_cycles) best = std::move(s);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Infeasible) throw;
        if (!first_failure) first_failure = e;
        break;
      }
      brams = trial.admitted;
    }
  }
  if (!best) throw *first_failure;
  finish_plan(net, dev, *best);

  const ShapedNetwork planned = net.batch() == batch ? net : net.with_batch(batch);
  best->start_table =
      dma_start_table(planned, best->plan, LayoutKind::RESHAPED, dev.stream_width_words);
  return std::move(*best);
}

}  // namespace edgetrain
