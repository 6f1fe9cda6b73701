// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include "edgetrain/errors.hpp"

namespace edgetrain {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'T', 'C', 'K'};

enum class Role : std::uint32_t { Weights = 0, Gamma = 1, Beta = 2 };

void put_tensor(std::ostream& out, std::uint32_t layer, Role role, const Dims4& dims,
                std::span<const float> data) {
  detail::put_u32(out, layer);
  detail::put_u32(out, static_cast<std::uint32_t>(role));
  for (auto d : dims.as_array()) detail::put_u32(out, static_cast<std::uint32_t>(d));
  for (float v : data) detail::put_f32(out, v);
}

std::vector<float> get_values(std::istream& in, std::int64_t count) {
  std::vector<float> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = detail::get_f32(in);
  return out;
}

}  // namespace

namespace detail {

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                  static_cast<char>((v >> 16) & 0xFF),
                                  static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), b.size());
  require(in.gcount() == 4, ErrorCode::ConfigError, "unexpected end of binary stream");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

}  // namespace detail

void write_checkpoint(std::ostream& out, const Params& params) {
  std::uint32_t records = 0;
  for (const auto& lp : params.layers) {
    if (lp.weights.size() > 0) ++records;
    if (lp.bn) records += 2;
  }
  out.write(kMagic.data(), kMagic.size());
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, records);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& lp = params.layers[i];
    const auto index = static_cast<std::uint32_t>(i);
    if (lp.weights.size() > 0) put_tensor(out, index, Role::Weights, lp.weights.dims(), lp.weights.data());
    if (lp.bn) {
      const Dims4 vec{1, static_cast<std::int64_t>(lp.bn->gamma.size()), 1, 1};
      put_tensor(out, index, Role::Gamma, vec, lp.bn->gamma);
      put_tensor(out, index, Role::Beta, vec, lp.bn->beta);
    }
  }
  require(out.good(), ErrorCode::ConfigError, "checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Params& params) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
  write_checkpoint(out, params);
}

Params read_checkpoint(std::istream& in, const ShapedNetwork& net) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  require(in.gcount() == 4 && magic == kMagic, ErrorCode::ConfigError, "not a checkpoint stream");
  const std::uint32_t version = detail::get_u32(in);
  require(version == kCheckpointVersion, ErrorCode::ConfigError,
          "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t records = detail::get_u32(in);

  Params params = init_params(net, 0);
  std::vector<int> seen(params.layers.size(), 0);
  for (std::uint32_t r = 0; r < records; ++r) {
    const std::uint32_t layer = detail::get_u32(in);
    const std::uint32_t role = detail::get_u32(in);
    Dims4 dims;
    dims.d0 = detail::get_u32(in);
    dims.d1 = detail::get_u32(in);
    dims.d2 = detail::get_u32(in);
    dims.d3 = detail::get_u32(in);
    require(layer < params.layers.size(), ErrorCode::ShapeMismatch,
            "checkpoint names layer " + std::to_string(layer) + " beyond the network");
    LayerParams& lp = params.layers[layer];
    ++seen[layer];
    switch (static_cast<Role>(role)) {
      case Role::Weights:
        require_dims(dims, lp.weights.dims(), "checkpoint weights");
        lp.weights = Tensor(dims, get_values(in, dims.size()));
        break;
      case Role::Gamma:
      case Role::Beta: {
        require(lp.bn.has_value(), ErrorCode::ShapeMismatch,
                "checkpoint has BatchNorm parameters for a non-BatchNorm layer");
        const Dims4 want{1, static_cast<std::int64_t>(lp.bn->gamma.size()), 1, 1};
        require_dims(dims, want, "checkpoint BatchNorm vector");
        auto values = get_values(in, dims.size());
        (static_cast<Role>(role) == Role::Gamma ? lp.bn->gamma : lp.bn->beta) = std::move(values);
        break;
      }
      default:
        fail(ErrorCode::ConfigError, "unknown checkpoint record role " + std::to_string(role));
    }
  }
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const int expected = (params.layers[i].weights.size() > 0 ? 1 : 0) + (params.layers[i].bn ? 2 : 0);
    require(seen[i] == expected, ErrorCode::ShapeMismatch,
            "checkpoint does not cover the parameters of layer '" + net.layer(i).name + "'");
  }
  return params;
}

Params load_checkpoint(const std::filesystem::path& path, const ShapedNetwork& net) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::ConfigError, "cannot open '" + path.string() + "'");
  return read_checkpoint(in, net);
}

}  // namespace edgetrain
