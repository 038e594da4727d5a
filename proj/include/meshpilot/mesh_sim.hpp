#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "meshpilot/action_grammar.hpp"
#include "meshpilot/rng.hpp"

namespace meshpilot {

/// 1-based node index, rendered as "node1", "node2", ...
struct NodeId {
    int index = 0;
    bool operator==(const NodeId&) const = default;
    auto operator<=>(const NodeId&) const = default;
};

struct Position {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    bool operator==(const Position&) const = default;
};

struct NodeState {
    NodeId id;
    Position position;
    std::vector<NodeId> neighbors;  // no duplicates, never contains id
    int channel = 0;                // always equals the mesh shared_channel
    double tx_throughput_mbps = 0.0;
    double rx_throughput_mbps = 0.0;
    double latency_ms = 0.0;
    double packet_loss_pct = 0.0;
    bool operator==(const NodeState&) const = default;
};

/// Full snapshot of the simulated mesh. Actions are mesh-wide, so a single
/// shared channel and throughput target cover every node.
struct MeshState {
    int node_count = 0;
    std::vector<NodeState> nodes;
    int shared_channel = 0;
    double target_throughput_mbps = 2.0;
    std::map<int, std::vector<NodeId>> pending_neighbor_updates;
    std::map<int, Position> pending_position_updates;
    std::set<int> jammed_channels;
    std::uint64_t step_counter = 0;
    bool operator==(const MeshState&) const = default;
};

enum class EventKind {
    StatusReport,
    BestNeighborsUpdate,
    PositionUpdate,
    JammingDetected,
    InterferenceDetected,
    MaliciousTraffic,
};

struct StatusMetrics {
    double tx_throughput_mbps = 0.0;
    double rx_throughput_mbps = 0.0;
    double latency_ms = 0.0;
    double packet_loss_pct = 0.0;
    bool operator==(const StatusMetrics&) const = default;
};

/// One observation-triggering occurrence. Payload fields are populated per
/// kind: neighbors for BestNeighborsUpdate, position for PositionUpdate,
/// channel for Jamming/Interference, metrics for StatusReport.
struct NetworkEvent {
    EventKind kind = EventKind::StatusReport;
    std::optional<NodeId> subject;
    std::vector<NodeId> neighbors;
    std::optional<Position> position;
    std::optional<int> channel;
    std::optional<StatusMetrics> metrics;
    bool operator==(const NetworkEvent&) const = default;
};

/// Relative draw weights per event kind. Defaults keep routine status
/// reports dominant; meshes with a single node cannot emit neighbor or
/// malicious-traffic events, so those weights drop to zero there.
struct EventWeights {
    double status_report = 0.40;
    double best_neighbors_update = 0.20;
    double position_update = 0.15;
    double jamming_detected = 0.10;
    double interference_detected = 0.10;
    double malicious_traffic = 0.05;
    bool operator==(const EventWeights&) const = default;
};

/// Nodes start on a deterministic grid, node i at (10*(i-1), 0, 0) meters,
/// all on start_channel with empty neighbor lists and a 2 Mb/s target.
/// Throws ConfigError for node_count = 0 or a channel outside 36..46.
MeshState init_mesh(int node_count, int start_channel);

/// Draws the next event from the weighted kind mix and records its payload
/// into the state: neighbor/position updates land in the pending maps,
/// jamming/interference channels join jammed_channels, and status metrics
/// refresh the subject node's counters.
NetworkEvent next_event(MeshState& state, SplitMix64& rng,
                        const EventWeights& weights = EventWeights{});

enum class ApplyStatus {
    Applied,
    /// Update-Neighbors/Position arrived with no pending entry. Non-fatal:
    /// the state is unchanged except for step_counter.
    StaleAction,
};

struct ApplyResult {
    MeshState state;
    ApplyStatus status = ApplyStatus::Applied;
};

/// Applies one action to a snapshot and returns the successor. Pure: the same
/// (state, action) pair always yields the same result. Throws
/// InvalidActionError when the action is not in the valid set for this mesh.
ApplyResult apply_action(const MeshState& state, const Action& action);

/// First violated mesh invariant as text, or nullopt when the state is
/// well-formed: channels in 36..46 and uniform across nodes, neighbor lists
/// duplicate- and self-free, pending maps keyed by valid node ids.
std::optional<std::string> mesh_state_violation(const MeshState& state);

/// Key-sorted JSON document; floats rendered in shortest round-trip form.
/// The normative serialization for golden tests and replay logs.
std::string to_canonical_json(const MeshState& state);

MeshState mesh_state_from_json(const std::string& json_text);

}  // namespace meshpilot
