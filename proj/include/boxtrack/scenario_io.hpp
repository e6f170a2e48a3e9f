#pragma once

#include <filesystem>
#include <vector>

#include "boxtrack/jsonl.hpp"
#include "boxtrack/world.hpp"

namespace boxtrack {

json operation_to_json(const Operation& op);
Operation operation_from_json(const json& j);

/// {id, initial, ops, signature}. Derived states are never serialized.
json scenario_to_json(const Scenario& sc);

/// Rebuilds the derived states and checks every step plus the stored
/// signature. Throws InvalidArgument / PreconditionViolation on bad data.
Scenario scenario_from_json(const json& j, const WorldConfig& cfg);

std::vector<Scenario> read_scenarios(const std::filesystem::path& path, const WorldConfig& cfg);
void write_scenarios(const std::filesystem::path& path, const std::vector<Scenario>& scenarios);

json world_config_to_json(const WorldConfig& cfg, bool include_objects = false);

}  // namespace boxtrack
