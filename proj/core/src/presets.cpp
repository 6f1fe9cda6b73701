// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/presets.hpp"

#include <span>
#include <utility>

namespace edgetrain {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kPresetTable[];
extern const unsigned kPresetCount;
}  // namespace detail

namespace {
std::span<const std::pair<std::string_view, std::string_view>> table() noexcept {
  return {detail::kPresetTable, detail::kPresetCount};
}
}  // namespace

std::optional<std::string_view> preset_text(std::string_view key) noexcept {
  for (const auto& [k, body] : table()) {
    if (k == key) return body;
  }
  return std::nullopt;
}

std::vector<std::string_view> preset_keys() {
  std::vector<std::string_view> out;
  for (const auto& entry : table()) out.push_back(entry.first);
  return out;
}

}  // namespace edgetrain
