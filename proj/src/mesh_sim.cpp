#include "meshpilot/mesh_sim.hpp"

#include <algorithm>
#include <cmath>

#include "json_codec.hpp"
#include "meshpilot/errors.hpp"

namespace meshpilot {

namespace {

// Round to a decimal grid; dividing by the scale lands on the double nearest
// the decimal value, so serialized numbers read as "23.2" rather than a
// 17-digit neighbor.
double round_to(double value, double scale) { return std::round(value * scale) / scale; }

void require_channel(int channel) {
    if (channel < kChannelMin || channel > kChannelMax) {
        throw ConfigError("channel " + std::to_string(channel) + " outside " +
                          std::to_string(kChannelMin) + ".." + std::to_string(kChannelMax));
    }
}

}  // namespace

MeshState init_mesh(int node_count, int start_channel) {
    if (node_count < 1) {
        throw ConfigError("node_count must be at least 1");
    }
    require_channel(start_channel);

    MeshState state;
    state.node_count = node_count;
    state.shared_channel = start_channel;
    state.target_throughput_mbps = 2.0;
    state.nodes.reserve(static_cast<std::size_t>(node_count));
    for (int i = 1; i <= node_count; ++i) {
        NodeState node;
        node.id = NodeId{i};
        node.position = Position{10.0 * (i - 1), 0.0, 0.0};
        node.channel = start_channel;
        state.nodes.push_back(std::move(node));
    }
    return state;
}

NetworkEvent next_event(MeshState& state, SplitMix64& rng, const EventWeights& weights) {
    const int n = state.node_count;

    // Kinds in declaration order; single-node meshes cannot produce neighbor
    // or malicious-traffic events.
    const std::pair<EventKind, double> mix[] = {
        {EventKind::StatusReport, weights.status_report},
        {EventKind::BestNeighborsUpdate, n > 1 ? weights.best_neighbors_update : 0.0},
        {EventKind::PositionUpdate, weights.position_update},
        {EventKind::JammingDetected, weights.jamming_detected},
        {EventKind::InterferenceDetected, weights.interference_detected},
        {EventKind::MaliciousTraffic, n > 1 ? weights.malicious_traffic : 0.0},
    };
    double total = 0.0;
    for (const auto& [kind, weight] : mix) total += weight;
    if (total <= 0.0) {
        throw ConfigError("event weights sum to zero");
    }

    const double draw = rng.next_double() * total;
    EventKind kind = EventKind::StatusReport;
    double cumulative = 0.0;
    for (const auto& [candidate, weight] : mix) {
        cumulative += weight;
        if (draw < cumulative && weight > 0.0) {
            kind = candidate;
            break;
        }
    }

    NetworkEvent event;
    event.kind = kind;
    switch (kind) {
        case EventKind::StatusReport: {
            const int subject = rng.uniform_int(1, n);
            StatusMetrics metrics;
            const double target = state.target_throughput_mbps;
            metrics.tx_throughput_mbps = round_to(target * (0.5 + rng.next_double()), 100.0);
            metrics.rx_throughput_mbps = round_to(target * (0.5 + rng.next_double()), 100.0);
            metrics.latency_ms = round_to(1.0 + 49.0 * rng.next_double(), 10.0);
            metrics.packet_loss_pct = round_to(5.0 * rng.next_double(), 10.0);
            event.subject = NodeId{subject};
            event.metrics = metrics;

            NodeState& node = state.nodes[static_cast<std::size_t>(subject - 1)];
            node.tx_throughput_mbps = metrics.tx_throughput_mbps;
            node.rx_throughput_mbps = metrics.rx_throughput_mbps;
            node.latency_ms = metrics.latency_ms;
            node.packet_loss_pct = metrics.packet_loss_pct;
            break;
        }
        case EventKind::BestNeighborsUpdate: {
            const int subject = rng.uniform_int(1, n);
            std::vector<NodeId> others;
            for (int i = 1; i <= n; ++i) {
                if (i != subject) others.push_back(NodeId{i});
            }
            const int count = rng.uniform_int(1, n - 1);
            auto picked = rng.sample(others, static_cast<std::size_t>(count));
            std::sort(picked.begin(), picked.end());
            event.subject = NodeId{subject};
            event.neighbors = picked;
            state.pending_neighbor_updates[subject] = picked;
            break;
        }
        case EventKind::PositionUpdate: {
            const int subject = rng.uniform_int(1, n);
            const Position position{round_to(100.0 * rng.next_double(), 10.0),
                                    round_to(100.0 * rng.next_double(), 10.0),
                                    round_to(100.0 * rng.next_double(), 10.0)};
            event.subject = NodeId{subject};
            event.position = position;
            state.pending_position_updates[subject] = position;
            break;
        }
        case EventKind::JammingDetected:
        case EventKind::InterferenceDetected: {
            int channel = state.shared_channel;
            if (rng.next_double() >= 0.5) {
                // Off-channel report: uniform over the other ten channels.
                int pick = kChannelMin + rng.uniform_int(0, kChannelMax - kChannelMin - 1);
                if (pick >= state.shared_channel) ++pick;
                channel = pick;
            }
            event.channel = channel;
            state.jammed_channels.insert(channel);
            break;
        }
        case EventKind::MaliciousTraffic: {
            // Disconnect targets exist only for nodes 2..n.
            event.subject = NodeId{rng.uniform_int(2, n)};
            break;
        }
    }
    return event;
}

ApplyResult apply_action(const MeshState& state, const Action& action) {
    const auto valid = enumerate_valid_actions(state);
    if (std::find(valid.begin(), valid.end(), action) == valid.end()) {
        throw InvalidActionError("action not in the valid set: " + canonical_render(action));
    }

    ApplyResult result{state, ApplyStatus::Applied};
    MeshState& next = result.state;
    next.step_counter += 1;

    if (const auto* sw = std::get_if<SwitchChannel>(&action)) {
        next.shared_channel = sw->channel;
        for (NodeState& node : next.nodes) node.channel = sw->channel;
        // A completed switch is the mitigation; the jam ledger starts over.
        next.jammed_channels.clear();
    } else if (const auto* disc = std::get_if<DisconnectNode>(&action)) {
        const NodeId target{disc->node};
        for (NodeState& node : next.nodes) {
            if (node.id == target) {
                node.neighbors.clear();
            } else {
                std::erase(node.neighbors, target);
            }
        }
    } else if (const auto* upd = std::get_if<UpdateNeighbors>(&action)) {
        const auto it = next.pending_neighbor_updates.find(upd->node);
        if (it == next.pending_neighbor_updates.end()) {
            result.status = ApplyStatus::StaleAction;
        } else {
            next.nodes[static_cast<std::size_t>(upd->node - 1)].neighbors = it->second;
            next.pending_neighbor_updates.erase(it);
        }
    } else if (const auto* thr = std::get_if<SetThroughput>(&action)) {
        next.target_throughput_mbps = thr->mbps;
    } else if (const auto* pos = std::get_if<UpdatePosition>(&action)) {
        const auto it = next.pending_position_updates.find(pos->node);
        if (it == next.pending_position_updates.end()) {
            result.status = ApplyStatus::StaleAction;
        } else {
            next.nodes[static_cast<std::size_t>(pos->node - 1)].position = it->second;
            next.pending_position_updates.erase(it);
        }
    }
    // NoAction: step_counter only.
    return result;
}

std::optional<std::string> mesh_state_violation(const MeshState& state) {
    if (state.node_count < 1) return "node_count below 1";
    if (static_cast<int>(state.nodes.size()) != state.node_count) {
        return "nodes list does not match node_count";
    }
    if (state.shared_channel < kChannelMin || state.shared_channel > kChannelMax) {
        return "shared_channel outside 36..46";
    }
    for (const NodeState& node : state.nodes) {
        if (node.id.index < 1 || node.id.index > state.node_count) {
            return "node id outside 1..node_count";
        }
        if (node.channel != state.shared_channel) {
            return "node channel differs from shared_channel";
        }
        std::set<int> seen;
        for (NodeId neighbor : node.neighbors) {
            if (neighbor.index == node.id.index) return "node neighbors itself";
            if (neighbor.index < 1 || neighbor.index > state.node_count) {
                return "neighbor id outside 1..node_count";
            }
            if (!seen.insert(neighbor.index).second) return "duplicate neighbor";
        }
    }
    for (const auto& [node, neighbors] : state.pending_neighbor_updates) {
        (void)neighbors;
        if (node < 1 || node > state.node_count) return "pending neighbor key invalid";
    }
    for (const auto& [node, position] : state.pending_position_updates) {
        (void)position;
        if (node < 1 || node > state.node_count) return "pending position key invalid";
    }
    for (int channel : state.jammed_channels) {
        if (channel < kChannelMin || channel > kChannelMax) {
            return "jammed channel outside 36..46";
        }
    }
    return std::nullopt;
}

std::string to_canonical_json(const MeshState& state) {
    return detail::state_to_json(state).dump();
}

MeshState mesh_state_from_json(const std::string& json_text) {
    return detail::state_from_json(nlohmann::json::parse(json_text));
}

namespace detail {

using nlohmann::json;

json state_to_json(const MeshState& state) {
    json nodes = json::array();
    for (const NodeState& node : state.nodes) {
        json neighbors = json::array();
        for (NodeId id : node.neighbors) neighbors.push_back(id.index);
        nodes.push_back({
            {"channel", node.channel},
            {"id", node.id.index},
            {"latency_ms", node.latency_ms},
            {"neighbors", neighbors},
            {"packet_loss_pct", node.packet_loss_pct},
            {"position", {node.position.x, node.position.y, node.position.z}},
            {"rx_throughput_mbps", node.rx_throughput_mbps},
            {"tx_throughput_mbps", node.tx_throughput_mbps},
        });
    }

    json pending_neighbors = json::object();
    for (const auto& [node, neighbors] : state.pending_neighbor_updates) {
        json list = json::array();
        for (NodeId id : neighbors) list.push_back(id.index);
        pending_neighbors[std::to_string(node)] = list;
    }
    json pending_positions = json::object();
    for (const auto& [node, position] : state.pending_position_updates) {
        pending_positions[std::to_string(node)] = {position.x, position.y, position.z};
    }

    return json{
        {"jammed_channels", state.jammed_channels},
        {"node_count", state.node_count},
        {"nodes", nodes},
        {"pending_neighbor_updates", pending_neighbors},
        {"pending_position_updates", pending_positions},
        {"shared_channel", state.shared_channel},
        {"step_counter", state.step_counter},
        {"target_throughput_mbps", state.target_throughput_mbps},
    };
}

MeshState state_from_json(const json& doc) {
    MeshState state;
    state.node_count = doc.at("node_count").get<int>();
    state.shared_channel = doc.at("shared_channel").get<int>();
    state.target_throughput_mbps = doc.at("target_throughput_mbps").get<double>();
    state.step_counter = doc.at("step_counter").get<std::uint64_t>();
    for (int channel : doc.at("jammed_channels")) state.jammed_channels.insert(channel);

    for (const json& node_doc : doc.at("nodes")) {
        NodeState node;
        node.id = NodeId{node_doc.at("id").get<int>()};
        node.channel = node_doc.at("channel").get<int>();
        const auto& pos = node_doc.at("position");
        node.position = Position{pos.at(0).get<double>(), pos.at(1).get<double>(),
                                 pos.at(2).get<double>()};
        for (int idx : node_doc.at("neighbors")) node.neighbors.push_back(NodeId{idx});
        node.tx_throughput_mbps = node_doc.at("tx_throughput_mbps").get<double>();
        node.rx_throughput_mbps = node_doc.at("rx_throughput_mbps").get<double>();
        node.latency_ms = node_doc.at("latency_ms").get<double>();
        node.packet_loss_pct = node_doc.at("packet_loss_pct").get<double>();
        state.nodes.push_back(std::move(node));
    }

    for (const auto& [key, value] : doc.at("pending_neighbor_updates").items()) {
        std::vector<NodeId> neighbors;
        for (int idx : value) neighbors.push_back(NodeId{idx});
        state.pending_neighbor_updates[std::stoi(key)] = std::move(neighbors);
    }
    for (const auto& [key, value] : doc.at("pending_position_updates").items()) {
        state.pending_position_updates[std::stoi(key)] =
            Position{value.at(0).get<double>(), value.at(1).get<double>(),
                     value.at(2).get<double>()};
    }
    return state;
}

std::string event_kind_token(EventKind kind) {
    switch (kind) {
        case EventKind::StatusReport: return "status_report";
        case EventKind::BestNeighborsUpdate: return "best_neighbors_update";
        case EventKind::PositionUpdate: return "position_update";
        case EventKind::JammingDetected: return "jamming_detected";
        case EventKind::InterferenceDetected: return "interference_detected";
        case EventKind::MaliciousTraffic: return "malicious_traffic";
    }
    return "status_report";
}

EventKind event_kind_from_token(const std::string& token) {
    if (token == "status_report") return EventKind::StatusReport;
    if (token == "best_neighbors_update") return EventKind::BestNeighborsUpdate;
    if (token == "position_update") return EventKind::PositionUpdate;
    if (token == "jamming_detected") return EventKind::JammingDetected;
    if (token == "interference_detected") return EventKind::InterferenceDetected;
    if (token == "malicious_traffic") return EventKind::MaliciousTraffic;
    throw ConfigError("unknown event kind: " + token);
}

json event_to_json(const NetworkEvent& event) {
    json doc{{"kind", event_kind_token(event.kind)}};
    if (event.subject) doc["subject"] = event.subject->index;
    if (!event.neighbors.empty()) {
        json list = json::array();
        for (NodeId id : event.neighbors) list.push_back(id.index);
        doc["neighbors"] = list;
    }
    if (event.position) {
        doc["position"] = {event.position->x, event.position->y, event.position->z};
    }
    if (event.channel) doc["channel"] = *event.channel;
    if (event.metrics) {
        doc["metrics"] = {
            {"latency_ms", event.metrics->latency_ms},
            {"packet_loss_pct", event.metrics->packet_loss_pct},
            {"rx_throughput_mbps", event.metrics->rx_throughput_mbps},
            {"tx_throughput_mbps", event.metrics->tx_throughput_mbps},
        };
    }
    return doc;
}

NetworkEvent event_from_json(const json& doc) {
    NetworkEvent event;
    event.kind = event_kind_from_token(doc.at("kind").get<std::string>());
    if (doc.contains("subject")) event.subject = NodeId{doc.at("subject").get<int>()};
    if (doc.contains("neighbors")) {
        for (int idx : doc.at("neighbors")) event.neighbors.push_back(NodeId{idx});
    }
    if (doc.contains("position")) {
        const auto& pos = doc.at("position");
        event.position = Position{pos.at(0).get<double>(), pos.at(1).get<double>(),
                                  pos.at(2).get<double>()};
    }
    if (doc.contains("channel")) event.channel = doc.at("channel").get<int>();
    if (doc.contains("metrics")) {
        const auto& m = doc.at("metrics");
        event.metrics = StatusMetrics{
            m.at("tx_throughput_mbps").get<double>(),
            m.at("rx_throughput_mbps").get<double>(),
            m.at("latency_ms").get<double>(),
            m.at("packet_loss_pct").get<double>(),
        };
    }
    return event;
}

}  // namespace detail

}  // namespace meshpilot
