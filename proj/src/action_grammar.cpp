#include "meshpilot/action_grammar.hpp"

#include <cctype>

#include "meshpilot/mesh_sim.hpp"
#include "meshpilot/number_format.hpp"

namespace meshpilot {

std::vector<Action> enumerate_valid_actions(int node_count) {
    std::vector<Action> actions;
    for (int node = 2; node <= node_count; ++node) {
        actions.push_back(DisconnectNode{node});
    }
    for (int channel = kChannelMin; channel <= kChannelMax; ++channel) {
        actions.push_back(SwitchChannel{channel});
    }
    for (int node = 1; node <= node_count; ++node) {
        actions.push_back(UpdateNeighbors{node});
    }
    for (double mbps : throughput_tiers_mbps()) {
        actions.push_back(SetThroughput{mbps});
    }
    for (int node = 1; node <= node_count; ++node) {
        actions.push_back(UpdatePosition{node});
    }
    actions.push_back(NoAction{});
    return actions;
}

std::vector<Action> enumerate_valid_actions(const MeshState& state) {
    return enumerate_valid_actions(state.node_count);
}

std::string canonical_render(const Action& action) {
    struct Renderer {
        std::string operator()(const DisconnectNode& a) const {
            return "Disconnect all nodes from node " + std::to_string(a.node);
        }
        std::string operator()(const SwitchChannel& a) const {
            return "Switch all nodes to channel " + std::to_string(a.channel);
        }
        std::string operator()(const UpdateNeighbors& a) const {
            return "Update Neighbors of node " + std::to_string(a.node);
        }
        std::string operator()(const SetThroughput& a) const {
            return "Set Network Throughput to " + format_shortest(a.mbps) +
                   " Mb/s for all nodes";
        }
        std::string operator()(const UpdatePosition& a) const {
            return "Update Local Position of node " + std::to_string(a.node);
        }
        std::string operator()(const NoAction&) const { return "No Action"; }
    };
    return std::visit(Renderer{}, action);
}

namespace {

std::optional<int> parse_int_suffix(const std::string& text, const std::string& prefix) {
    if (!text.starts_with(prefix)) return std::nullopt;
    const std::string rest = text.substr(prefix.size());
    if (rest.empty() || rest.size() > 9) return std::nullopt;
    if (rest.size() > 1 && rest.front() == '0') return std::nullopt;  // no leading zeros
    int value = 0;
    for (char ch : rest) {
        if (ch < '0' || ch > '9') return std::nullopt;
        value = value * 10 + (ch - '0');
    }
    return value;
}

}  // namespace

std::optional<Action> action_from_canonical(const std::string& text) {
    if (text == "No Action") return Action{NoAction{}};
    if (auto node = parse_int_suffix(text, "Disconnect all nodes from node ")) {
        return Action{DisconnectNode{*node}};
    }
    if (auto channel = parse_int_suffix(text, "Switch all nodes to channel ")) {
        return Action{SwitchChannel{*channel}};
    }
    if (auto node = parse_int_suffix(text, "Update Neighbors of node ")) {
        return Action{UpdateNeighbors{*node}};
    }
    if (auto node = parse_int_suffix(text, "Update Local Position of node ")) {
        return Action{UpdatePosition{*node}};
    }
    static const std::string throughput_prefix = "Set Network Throughput to ";
    static const std::string throughput_suffix = " Mb/s for all nodes";
    if (text.starts_with(throughput_prefix) && text.ends_with(throughput_suffix) &&
        text.size() > throughput_prefix.size() + throughput_suffix.size()) {
        const std::string digits = text.substr(
            throughput_prefix.size(),
            text.size() - throughput_prefix.size() - throughput_suffix.size());
        for (double mbps : throughput_tiers_mbps()) {
            if (format_shortest(mbps) == digits) return Action{SetThroughput{mbps}};
        }
    }
    return std::nullopt;
}

std::string normalize(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    return out;
}

namespace {

bool iequals_at(const std::string& text, std::size_t pos, const std::string& token) {
    if (pos + token.size() > text.size()) return false;
    for (std::size_t i = 0; i < token.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[pos + i])) !=
            std::tolower(static_cast<unsigned char>(token[i]))) {
            return false;
        }
    }
    return true;
}

std::size_t find_ci(const std::string& text, const std::string& token, std::size_t from) {
    if (token.empty() || from > text.size()) return std::string::npos;
    for (std::size_t pos = from; pos + token.size() <= text.size(); ++pos) {
        if (iequals_at(text, pos, token)) return pos;
    }
    return std::string::npos;
}

}  // namespace

ParseOutcome parse_tagged_response(const std::string& response,
                                   const std::vector<Action>& valid) {
    static const std::string open_tag = "<ACTION>";
    static const std::string close_tag = "</ACTION>";

    ParseOutcome outcome;
    std::string first_content;
    std::size_t cursor = 0;
    while (true) {
        const std::size_t open = find_ci(response, open_tag, cursor);
        if (open == std::string::npos) break;
        const std::size_t body = open + open_tag.size();
        const std::size_t close = find_ci(response, close_tag, body);
        if (close == std::string::npos) break;  // unterminated span, not a tag
        if (outcome.tag_count == 0) {
            first_content = response.substr(body, close - body);
        }
        ++outcome.tag_count;
        cursor = close + close_tag.size();
    }

    if (outcome.tag_count == 0) {
        outcome.status = ParseStatus::MissingTag;
        return outcome;
    }

    outcome.raw = first_content;
    const std::string wanted = normalize(first_content);
    for (const Action& candidate : valid) {
        if (normalize(canonical_render(candidate)) == wanted) {
            outcome.action = candidate;
            break;
        }
    }

    if (outcome.tag_count > 1) {
        outcome.status = ParseStatus::MultipleTags;
    } else {
        outcome.status = outcome.action ? ParseStatus::Parsed : ParseStatus::InvalidAction;
    }
    return outcome;
}

}  // namespace meshpilot
