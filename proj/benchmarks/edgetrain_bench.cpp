// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

#include "edgetrain/config_io.hpp"
#include "edgetrain/dataset.hpp"
#include "edgetrain/dma.hpp"
#include "edgetrain/perf.hpp"
#include "edgetrain/reftrain.hpp"
#include "edgetrain/sched.hpp"

namespace edgetrain {
namespace {

ShapedNetwork alexnet_conv() { return validate_and_infer(load_network("alexnet_conv")); }

void BM_AnalyticAlexNet(benchmark::State& state) {
  const ShapedNetwork net = alexnet_conv();
  const TilePlan plan = load_plan("alexnet_published", net);
  const DeviceSpec dev;
  for (auto _ : state) {
    Cycles total = 0;
    for (std::size_t i = 0; i < net.size(); ++i) {
      if (!net.layer(i).conv_like()) continue;
      for (Process p : kProcesses)
        total += process_latency(p, net.layer(i), plan.layers[i], plan.tm, dev, net.batch(),
                                 net.first_conv_like() == i)
                     .cycles;
    }
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_AnalyticAlexNet);

void BM_SimulateConv2(benchmark::State& state) {
  const ShapedNetwork net = alexnet_conv();
  const TilePlan plan = load_plan("alexnet_published", net);
  const DeviceSpec dev;
  std::size_t conv2 = 0;
  while (net.layer(conv2).name != "conv2") ++conv2;
  const auto kind = static_cast<LayoutKind>(state.range(0));
  for (auto _ : state) {
    const SimResult r = simulate_layer(Process::FP, net.layer(conv2), plan.layers[conv2], plan.tm,
                                       kind, dev, net.batch());
    benchmark::DoNotOptimize(r.cycles);
  }
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_SimulateConv2)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_SplitBursts(benchmark::State& state) {
  std::vector<std::uint64_t> addrs(static_cast<std::size_t>(state.range(0)));
  std::iota(addrs.begin(), addrs.end(), 0);
  std::mt19937_64 rng(1);
  for (std::size_t i = 0; i < addrs.size(); i += 64) addrs[i] += rng() % 1000;
  for (auto _ : state) benchmark::DoNotOptimize(split_bursts(addrs).size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SplitBursts)->Range(1 << 10, 1 << 20);

void BM_Schedule(benchmark::State& state) {
  const ShapedNetwork net = alexnet_conv();
  const DeviceSpec dev;
  for (auto _ : state) benchmark::DoNotOptimize(schedule(net, dev, net.batch()).predicted_cycles);
}
BENCHMARK(BM_Schedule)->Unit(benchmark::kMillisecond);

void BM_TrainStepTinyBn(benchmark::State& state) {
  const ShapedNetwork net = validate_and_infer(load_network("tiny_bn"));
  const Dataset data = synthetic_separable(net.batch(), net.input_shape(), 4, 1);
  const Batch batch = data.batch(0, net.batch());
  Params params = init_params(net, 1);
  for (auto _ : state) {
    TrainStep r = train_minibatch(net, std::move(params), batch);
    params = std::move(r.params);
    benchmark::DoNotOptimize(r.loss);
  }
}
BENCHMARK(BM_TrainStepTinyBn);

}  // namespace
}  // namespace edgetrain

BENCHMARK_MAIN();
