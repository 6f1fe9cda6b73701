// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "edgetrain/checkpoint.hpp"
#include "edgetrain/errors.hpp"

namespace edgetrain {

namespace {
constexpr std::array<char, 4> kMagic{'E', 'T', 'D', 'S'};
}  // namespace

Batch Dataset::batch(std::int64_t index, std::int64_t size) const {
  require(size >= 1 && samples() >= 1, ErrorCode::ShapeMismatch, "empty dataset or batch");
  const FeatureShape s = shape();
  const std::int64_t per = s.size();
  Batch out{Tensor(feature_dims(size, s)), std::vector<std::int32_t>(static_cast<std::size_t>(size))};
  for (std::int64_t b = 0; b < size; ++b) {
    const std::int64_t src = (index * size + b) % samples();
    std::copy_n(images.data().begin() + src * per, per, out.images.data().begin() + b * per);
    out.labels[static_cast<std::size_t>(b)] = labels[static_cast<std::size_t>(src)];
  }
  return out;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  const FeatureShape s = data.shape();
  out.write(kMagic.data(), kMagic.size());
  for (auto v : {static_cast<std::int64_t>(kDatasetVersion), data.samples(), s.channels, s.rows,
                 s.cols, static_cast<std::int64_t>(data.classes)})
    detail::put_u32(out, static_cast<std::uint32_t>(v));
  const std::int64_t per = s.size();
  for (std::int64_t i = 0; i < data.samples(); ++i) {
    detail::put_u32(out, static_cast<std::uint32_t>(data.labels[static_cast<std::size_t>(i)]));
    for (std::int64_t k = 0; k < per; ++k) detail::put_f32(out, data.images[i * per + k]);
  }
  require(out.good(), ErrorCode::ConfigError, "dataset write failed");
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
  write_dataset(out, data);
}

Dataset read_dataset(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  require(in.gcount() == 4 && magic == kMagic, ErrorCode::ConfigError, "not a dataset stream");
  const std::uint32_t version = detail::get_u32(in);
  require(version == kDatasetVersion, ErrorCode::ConfigError,
          "unsupported dataset version " + std::to_string(version));
  const std::int64_t n = detail::get_u32(in);
  const FeatureShape s{detail::get_u32(in), detail::get_u32(in), detail::get_u32(in)};
  Dataset data;
  data.classes = static_cast<std::int32_t>(detail::get_u32(in));
  require(n >= 1 && s.size() >= 1 && data.classes >= 1, ErrorCode::ConfigError,
          "dataset header has a zero field");
  data.images = Tensor(feature_dims(n, s));
  data.labels.resize(static_cast<std::size_t>(n));
  const std::int64_t per = s.size();
  for (std::int64_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::int32_t>(detail::get_u32(in));
    require(label >= 0 && label < data.classes, ErrorCode::LabelOutOfRange,
            "dataset label " + std::to_string(label) + " outside [0, " +
                std::to_string(data.classes) + ")");
    data.labels[static_cast<std::size_t>(i)] = label;
    for (std::int64_t k = 0; k < per; ++k) data.images[i * per + k] = detail::get_f32(in);
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::ConfigError, "cannot open '" + path.string() + "'");
  return read_dataset(in);
}

Dataset synthetic_separable(std::int64_t samples, const FeatureShape& shape,
                            std::int32_t classes, std::uint64_t seed, float noise) {
  require(samples >= 1 && shape.size() >= 1 && classes >= 1, ErrorCode::ShapeMismatch,
          "synthetic dataset needs positive sizes");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<float> gauss(0.0F, noise);
  const std::int64_t per = shape.size();
  std::vector<std::vector<float>> prototypes(static_cast<std::size_t>(classes));
  for (auto& p : prototypes) {
    p.resize(static_cast<std::size_t>(per));
    for (auto& v : p) v = coin(rng) ? 1.0F : -1.0F;
  }
  Dataset data;
  data.classes = classes;
  data.images = Tensor(feature_dims(samples, shape));
  data.labels.resize(static_cast<std::size_t>(samples));
  for (std::int64_t i = 0; i < samples; ++i) {
    const auto label = static_cast<std::int32_t>(i % classes);
    data.labels[static_cast<std::size_t>(i)] = label;
    const auto& proto = prototypes[static_cast<std::size_t>(label)];
    for (std::int64_t k = 0; k < per; ++k)
      data.images[i * per + k] = proto[static_cast<std::size_t>(k)] + gauss(rng);
  }
  return data;
}

}  // namespace edgetrain
