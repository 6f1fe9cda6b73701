// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

// Networks, devices and plans compiled into the library from data/.
// Keys look like "networks/alexnet" or "devices/zcu102".

#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace edgetrain {

std::optional<std::string_view> preset_text(std::string_view key) noexcept;
std::vector<std::string_view> preset_keys();

}  // namespace edgetrain
