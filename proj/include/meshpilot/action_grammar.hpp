#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace meshpilot {

struct MeshState;

// The closed action vocabulary the model chooses from. Parameters are bounded
// by the mesh: disconnect targets start at node 2 (node 1 is never cut off),
// channels span 36..46, throughput tiers are the three advertised rates.

struct DisconnectNode {
    int node = 0;
    bool operator==(const DisconnectNode&) const = default;
};

struct SwitchChannel {
    int channel = 0;
    bool operator==(const SwitchChannel&) const = default;
};

struct UpdateNeighbors {
    int node = 0;
    bool operator==(const UpdateNeighbors&) const = default;
};

struct SetThroughput {
    double mbps = 0.0;
    bool operator==(const SetThroughput&) const = default;
};

struct UpdatePosition {
    int node = 0;
    bool operator==(const UpdatePosition&) const = default;
};

struct NoAction {
    bool operator==(const NoAction&) const = default;
};

using Action = std::variant<DisconnectNode, SwitchChannel, UpdateNeighbors,
                            SetThroughput, UpdatePosition, NoAction>;

constexpr int kChannelMin = 36;
constexpr int kChannelMax = 46;

/// The three advertised throughput tiers, in action-list order.
inline const std::vector<double>& throughput_tiers_mbps() {
    static const std::vector<double> tiers = {0.1, 2.0, 10.0};
    return tiers;
}

/// The full valid action set for a mesh, in the order the user prompt lists
/// them: disconnects (nodes 2..n), channel switches (36..46), neighbor
/// updates (1..n), throughput tiers (0.1/2/10), position updates (1..n),
/// then No Action. A 3-node mesh yields exactly 23 actions.
std::vector<Action> enumerate_valid_actions(const MeshState& state);

/// Same enumeration from the node count alone.
std::vector<Action> enumerate_valid_actions(int node_count);

/// The exact action wording, byte for byte, as the prompt lists it.
std::string canonical_render(const Action& action);

/// Exact inverse of canonical_render. Recognizes the wording with any
/// parameter value; range checks against a mesh are the caller's job.
std::optional<Action> action_from_canonical(const std::string& text);

/// Lowercases, collapses whitespace runs to single spaces, trims the ends.
std::string normalize(const std::string& text);

enum class ParseStatus {
    Parsed,
    MissingTag,
    InvalidAction,
    MultipleTags,
};

/// Result of scanning a model response for an <ACTION>...</ACTION> span.
/// `action` is set whenever the first span's content normalizes to a member
/// of the valid set, including the MultipleTags case (first tag wins; the
/// extra tags are a protocol violation recorded via tag_count).
struct ParseOutcome {
    ParseStatus status = ParseStatus::MissingTag;
    std::optional<Action> action;
    std::string raw;  // first span's content, verbatim; empty when no tag
    int tag_count = 0;

    bool has_tag() const { return tag_count > 0; }
};

/// Finds <ACTION>...</ACTION> spans (tag names case-insensitive), extracts
/// the first span's content and matches it, after normalization, against the
/// valid set. Never throws; malformed input maps to an outcome variant.
ParseOutcome parse_tagged_response(const std::string& response,
                                   const std::vector<Action>& valid);

}  // namespace meshpilot
