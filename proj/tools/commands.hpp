// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace edgetrain::cli {

enum class Format { Json, Csv };

struct RunConfig {
  std::string net;
  std::string device = "zcu102";
  std::optional<std::int64_t> batch;
  std::optional<std::string> plan;
  std::string layout = "reshaped";
  std::uint64_t seed = 1;
  // Files go to this directory; empty means stdout.
  std::string out;
  Format format = Format::Json;
  bool audit = false;
};

struct TrainConfig {
  std::int64_t steps = 200;
  std::optional<std::int64_t> epochs;
  std::optional<std::string> dataset;
  std::int64_t samples = 256;
  std::int32_t classes = 4;
  std::optional<double> learning_rate;
};

int cmd_schedule(const RunConfig& cfg, std::ostream& out);
int cmd_estimate(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, const TrainConfig& train, std::ostream& out);
int cmd_layout_dump(const RunConfig& cfg, std::ostream& out);

}  // namespace edgetrain::cli
