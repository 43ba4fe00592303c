#pragma once

// JSON forms of the core types, shared by the store export, the manifest and
// the HTTP API. Field names are part of the documented API schema
// (docs/api_schema.json) and must stay stable.

#include <json.hpp>

#include "simsel/core.hpp"

namespace simsel {

nlohmann::json params_to_json(const ParamLevels& params);
ParamLevels params_from_json(const nlohmann::json& j);

nlohmann::json geometry_to_json(const Geometry& g);
Geometry geometry_from_json(SelectionType type, const nlohmann::json& j);

// Throws Error{kValidation} on missing or mistyped fields. Filter strings
// are parsed, so grammar errors surface with their own codes.
nlohmann::json spec_to_json(const SelectionSpec& spec);
SelectionSpec spec_from_json(const nlohmann::json& j);

nlohmann::json method_to_json(const MethodInfo& method);
MethodInfo method_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const PostRecord& record);
PostRecord record_from_json(const nlohmann::json& j);

nlohmann::json simulation_to_json(const SimulationRecord& record);
SimulationRecord simulation_from_json(const nlohmann::json& j);

}  // namespace simsel
