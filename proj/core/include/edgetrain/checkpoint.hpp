// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

// Parameter checkpoints. All fields are little-endian 32-bit words:
//
//   "ETCK"  version  record_count
//   per record: layer_index  role  d0 d1 d2 d3  then d0*d1*d2*d3 float32
//
// role 0 is a Conv/FC weight tensor (M, N, K, K); roles 1 and 2 are the
// gamma and beta vectors of a BatchNorm layer, stored as (1, channels, 1, 1).

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "edgetrain/model.hpp"
#include "edgetrain/reftrain.hpp"

namespace edgetrain {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Params& params);
void save_checkpoint(const std::filesystem::path& path, const Params& params);

// Throws ConfigError on a malformed stream and ShapeMismatch when a record
// does not fit the network.
Params read_checkpoint(std::istream& in, const ShapedNetwork& net);
Params load_checkpoint(const std::filesystem::path& path, const ShapedNetwork& net);

namespace detail {
void put_u32(std::ostream& out, std::uint32_t v);
std::uint32_t get_u32(std::istream& in);
void put_f32(std::ostream& out, float v);
float get_f32(std::istream& in);
}  // namespace detail

}  // namespace edgetrain
