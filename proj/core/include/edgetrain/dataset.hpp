// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

// Raw dataset files. All fields are little-endian 32-bit words:
//
//   "ETDS"  version  samples  channels  rows  cols  classes
//   per sample: label (int32) then channels*rows*cols float32

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "edgetrain/model.hpp"
#include "edgetrain/reftrain.hpp"

namespace edgetrain {

inline constexpr std::uint32_t kDatasetVersion = 1;

struct Dataset {
  Tensor images;  // (samples, channels, rows, cols)
  std::vector<std::int32_t> labels;
  std::int32_t classes = 0;

  [[nodiscard]] std::int64_t samples() const noexcept { return images.dims().d0; }
  [[nodiscard]] FeatureShape shape() const noexcept {
    return {images.dims().d1, images.dims().d2, images.dims().d3};
  }
  // Mini-batch `index` of size `batch`, wrapping around the end.
  [[nodiscard]] Batch batch(std::int64_t index, std::int64_t batch) const;
};

void write_dataset(std::ostream& out, const Dataset& data);
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);

// Each class gets a random +-1 prototype; samples add Gaussian noise of the
// given standard deviation to their class prototype.
Dataset synthetic_separable(std::int64_t samples, const FeatureShape& shape,
                            std::int32_t classes, std::uint64_t seed, float noise = 0.5F);

}  // namespace edgetrain
