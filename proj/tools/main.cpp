// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "edgetrain/errors.hpp"

namespace {

using edgetrain::ErrorCode;
using namespace edgetrain::cli;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;
constexpr int kInternal = 4;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Infeasible: return kInfeasible;
    case ErrorCode::InvariantViolation:
    case ErrorCode::OutOfRange:
    case ErrorCode::RegionMismatch:
    case ErrorCode::RegionOverflow:
    case ErrorCode::EmptyTrace:
    case ErrorCode::StaleState:
    case ErrorCode::MissingIndices: return kInternal;
    default: return kConfigError;
  }
}

void common_flags(CLI::App& cmd, RunConfig& cfg, bool with_plan, bool with_layout) {
  cmd.add_option("--net", cfg.net, "Network file or preset name")->required();
  cmd.add_option("--device", cfg.device, "Device file or preset name")->capture_default_str();
  cmd.add_option("--batch", cfg.batch, "Mini-batch size (overrides the network file)")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  cmd.add_option("--out", cfg.out, "Output directory (default: stdout)");
  cmd.add_option("--format", cfg.format, "Report format")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"json", Format::Json},
                                                                        {"csv", Format::Csv}}));
  if (with_plan) {
    cmd.add_option("--plan", cfg.plan, "Plan file or preset (default: schedule one)");
    cmd.add_flag("--audit", cfg.audit, "Include intermediate terms in the report");
  }
  if (with_layout) {
    cmd.add_option("--layout", cfg.layout, "DRAM layout")
        ->check(CLI::IsMember({"bchw", "bhwc", "reshaped"}))
        ->capture_default_str();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training accelerator model: scheduling, latency estimation and DMA simulation"};
  app.require_subcommand(1);

  RunConfig cfg;
  TrainConfig train;
  auto* schedule = app.add_subcommand("schedule", "Choose tile sizes and buffer banks for a network");
  common_flags(*schedule, cfg, false, false);
  auto* estimate = app.add_subcommand("estimate", "Analytic per-layer latency");
  common_flags(*estimate, cfg, true, false);
  auto* simulate = app.add_subcommand("simulate", "Trace-driven DMA simulation against the model");
  common_flags(*simulate, cfg, true, true);
  auto* layout_dump = app.add_subcommand("layout-dump", "Burst list of every DMA channel as CSV");
  common_flags(*layout_dump, cfg, true, true);
  auto* trainer = app.add_subcommand("train", "Train on a raw dataset or synthetic data");
  common_flags(*trainer, cfg, false, false);
  trainer->add_option("--steps", train.steps, "Mini-batch steps")->capture_default_str();
  trainer->add_option("--epochs", train.epochs, "Epochs over the dataset (overrides --steps)");
  trainer->add_option("--dataset", train.dataset, "Raw dataset file (default: synthetic)");
  trainer->add_option("--samples", train.samples, "Synthetic sample count")->capture_default_str();
  trainer->add_option("--classes", train.classes, "Synthetic class count")->capture_default_str();
  trainer->add_option("--lr", train.learning_rate, "Learning rate (overrides the network file)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*schedule) return cmd_schedule(cfg, std::cout);
    if (*estimate) return cmd_estimate(cfg, std::cout);
    if (*simulate) return cmd_simulate(cfg, std::cout);
    if (*layout_dump) return cmd_layout_dump(cfg, std::cout);
    if (*trainer) return cmd_train(cfg, train, std::cout);
  } catch (const edgetrain::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
