// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgetrain/config_io.hpp"
#include "edgetrain/dma.hpp"
#include "edgetrain/layout.hpp"
#include "edgetrain/model.hpp"
#include "edgetrain/perf.hpp"

namespace edgetrain {

struct ProcessReport {
  Process process = Process::FP;
  bool applicable = false;
  // Absent for layers without a closed form.
  std::optional<Cycles> analytic;
  std::optional<Cycles> simulated;
  std::uint64_t restarts = 0;
  AuditTerms audit;
  std::optional<SimResult> sim;

  [[nodiscard]] std::optional<double> deviation() const noexcept;
};

struct LayerReport {
  std::string name;
  LayerKind kind = LayerKind::Conv;
  // Pool and BatchNorm cycles come from the simulator only.
  bool estimated_by_simulation = false;
  std::array<ProcessReport, 3> processes;

  [[nodiscard]] const ProcessReport& at(Process p) const noexcept {
    return processes[static_cast<std::size_t>(p)];
  }
};

struct LatencyReport {
  std::string network;
  std::string device;
  std::int64_t batch = 1;
  double clock_hz = 100e6;
  std::optional<LayoutKind> layout;
  std::vector<LayerReport> layers;
  // Both totals cover the Conv/FC layers only.
  Cycles analytic_total = 0;
  std::optional<Cycles> simulated_total;
  std::int64_t train_ops = 0;

  [[nodiscard]] double gflops() const noexcept;
};

struct ReportOptions {
  // Runs the trace-driven simulator under this layout when set.
  std::optional<LayoutKind> simulate;
  bool audit = false;
  AnalyticOptions analytic;
};

LatencyReport network_report(const ShapedNetwork& net, const TilePlan& plan,
                             const DeviceSpec& dev, std::int64_t batch,
                             const ReportOptions& options = {});

Json to_json(const LatencyReport& report);
std::string to_csv(const LatencyReport& report);
// Throws InvariantViolation when the document is not a well-formed report.
void validate_report_json(const Json& j);

// layer,process,channel,burst_length,count,busy_cycles for every simulated program.
std::string burst_csv(const LatencyReport& report);
// layer,process,channel,burst_index,start_word,length over one network image.
std::string layout_dump_csv(const ShapedNetwork& net, const TilePlan& plan, LayoutKind kind,
                            const DeviceSpec& dev);

}  // namespace edgetrain
