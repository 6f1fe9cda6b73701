// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

// JSON encodings of networks, devices and tile plans.
//
// Network layers take either a "shape" array [M, N, R, C, K, S] or the
// individual keys; anything left out is inferred. Plan layers are matched to
// network layers by name and carry either one "tile" [Tr, Tc, M_on] for all
// processes or separate "fp", "bp" and "wu" entries.

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "edgetrain/layout.hpp"
#include "edgetrain/model.hpp"
#include "edgetrain/sched.hpp"

namespace edgetrain {

using Json = nlohmann::ordered_json;

NetworkSpec network_from_json(const Json& j);
Json to_json(const NetworkSpec& net);

DeviceSpec device_from_json(const Json& j);
Json to_json(const DeviceSpec& dev);

// Conv/FC layers missing from the plan raise PlanMismatch; other layers fall
// back to full-extent tiles.
TilePlan plan_from_json(const Json& j, const ShapedNetwork& net);
Json plan_to_json(const TilePlan& plan, const ShapedNetwork& net);
Json to_json(const ResourceUsage& usage);
Json to_json(const StartEntry& entry);
Json schedule_to_json(const Schedule& schedule, const ShapedNetwork& net);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Each accepts a file path or a preset name ("alexnet", "zcu102", ...).
NetworkSpec load_network(const std::string& ref);
DeviceSpec load_device(const std::string& ref);
TilePlan load_plan(const std::string& ref, const ShapedNetwork& net);

}  // namespace edgetrain
