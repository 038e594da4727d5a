#pragma once

// Internal nlohmann conversions shared by the simulator and corpus codecs;
// public headers expose only string-level serialization.

#include <json.hpp>

#include "meshpilot/mesh_sim.hpp"

namespace meshpilot::detail {

nlohmann::json state_to_json(const MeshState& state);
MeshState state_from_json(const nlohmann::json& doc);

nlohmann::json event_to_json(const NetworkEvent& event);
NetworkEvent event_from_json(const nlohmann::json& doc);

std::string event_kind_token(EventKind kind);
EventKind event_kind_from_token(const std::string& token);

}  // namespace meshpilot::detail
