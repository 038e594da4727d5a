#include "meshpilot/scenario_corpus.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "json_codec.hpp"
#include "meshpilot/errors.hpp"
#include "meshpilot/number_format.hpp"

namespace meshpilot {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "meshpilot-corpus-v1";

std::string node_label(const NodeId& id) { return "Node" + std::to_string(id.index); }

std::string bracket_list(const std::vector<NodeId>& ids) {
    std::string out = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(ids[i].index);
    }
    return out + "]";
}

std::string bracket_coords(const Position& position) {
    return "[" + format_decimal(position.x) + ", " + format_decimal(position.y) + ", " +
           format_decimal(position.z) + "]";
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char byte : bytes) {
        hash ^= byte;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

json config_to_json(const CorpusConfig& config) {
    return json{
        {"default_variant", variant_token(config.default_variant)},
        {"event_weights",
         {
             {"best_neighbors_update", config.event_weights.best_neighbors_update},
             {"interference_detected", config.event_weights.interference_detected},
             {"jamming_detected", config.event_weights.jamming_detected},
             {"malicious_traffic", config.event_weights.malicious_traffic},
             {"position_update", config.event_weights.position_update},
             {"status_report", config.event_weights.status_report},
         }},
        {"node_count", config.node_count},
        {"start_channel", config.start_channel},
        {"step_count", config.step_count},
    };
}

CorpusConfig config_from_json(const json& doc) {
    CorpusConfig config;
    config.node_count = doc.at("node_count").get<int>();
    config.start_channel = doc.at("start_channel").get<int>();
    config.step_count = doc.at("step_count").get<std::uint64_t>();
    config.default_variant = variant_from_token(doc.at("default_variant").get<std::string>());
    const auto& weights = doc.at("event_weights");
    config.event_weights.status_report = weights.at("status_report").get<double>();
    config.event_weights.best_neighbors_update =
        weights.at("best_neighbors_update").get<double>();
    config.event_weights.position_update = weights.at("position_update").get<double>();
    config.event_weights.jamming_detected = weights.at("jamming_detected").get<double>();
    config.event_weights.interference_detected =
        weights.at("interference_detected").get<double>();
    config.event_weights.malicious_traffic = weights.at("malicious_traffic").get<double>();
    return config;
}

}  // namespace

std::string render_observation(const NetworkEvent& event, const MeshState& state) {
    (void)state;
    switch (event.kind) {
        case EventKind::StatusReport: {
            const StatusMetrics& m = *event.metrics;
            return "Network Status from " + node_label(*event.subject) +
                   ": TX throughput is " + format_decimal(m.tx_throughput_mbps) +
                   " Mb/s, RX throughput is " + format_decimal(m.rx_throughput_mbps) +
                   " Mb/s, latency is " + format_decimal(m.latency_ms) +
                   " ms, packet loss is " + format_decimal(m.packet_loss_pct) + "%.";
        }
        case EventKind::BestNeighborsUpdate:
            return "Network Status from " + node_label(*event.subject) +
                   " Best Neighbors List is " + bracket_list(event.neighbors) + ".";
        case EventKind::PositionUpdate:
            return "Position update from " + node_label(*event.subject) + ": " +
                   bracket_coords(*event.position) + ".";
        case EventKind::JammingDetected:
            return "Jamming detected on channel " + std::to_string(*event.channel) + ".";
        case EventKind::InterferenceDetected:
            return "Interference detected on channel " + std::to_string(*event.channel) +
                   ".";
        case EventKind::MaliciousTraffic:
            return "Malicious traffic detected from " + node_label(*event.subject) + ".";
    }
    return {};
}

Action oracle_action(const NetworkEvent& event, const MeshState& state) {
    switch (event.kind) {
        case EventKind::StatusReport:
            return NoAction{};
        case EventKind::BestNeighborsUpdate:
            return UpdateNeighbors{event.subject->index};
        case EventKind::PositionUpdate:
            return UpdatePosition{event.subject->index};
        case EventKind::MaliciousTraffic:
            return DisconnectNode{event.subject->index};
        case EventKind::JammingDetected:
        case EventKind::InterferenceDetected: {
            if (*event.channel != state.shared_channel) {
                return NoAction{};  // not where the mesh is talking
            }
            for (int channel = kChannelMin; channel <= kChannelMax; ++channel) {
                if (channel == state.shared_channel) continue;
                if (state.jammed_channels.contains(channel)) continue;
                return SwitchChannel{channel};
            }
            throw NoCleanChannelError("every channel in 36..46 is jammed");
        }
    }
    return NoAction{};
}

Corpus generate_corpus(const CorpusConfig& config, std::uint64_t seed) {
    if (config.step_count < 1) {
        throw ConfigError("step_count must be at least 1");
    }

    Corpus corpus;
    corpus.seed = seed;
    corpus.config = config;
    corpus.config_digest = config_digest(config);

    SplitMix64 rng(seed);
    MeshState state = init_mesh(config.node_count, config.start_channel);
    corpus.steps.reserve(config.step_count);
    for (std::uint64_t index = 0; index < config.step_count; ++index) {
        const NetworkEvent event = next_event(state, rng, config.event_weights);

        ScenarioStep step;
        step.id = "s" + std::to_string(index + 1);
        step.step_index = index;
        step.event = event;
        step.observation = render_observation(event, state);
        step.reference_action = oracle_action(event, state);
        step.mesh_snapshot = state;  // post-event, pre-action
        step.prompt_variant = config.default_variant;
        corpus.steps.push_back(std::move(step));

        state = apply_action(state, corpus.steps.back().reference_action).state;
    }
    return corpus;
}

std::string config_digest(const CorpusConfig& config) {
    return hex64(fnv1a64(config_to_json(config).dump()));
}

std::string content_digest(const std::string& bytes) { return hex64(fnv1a64(bytes)); }

std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    out += json{{"config", config_to_json(corpus.config)},
                {"config_digest", corpus.config_digest},
                {"format", kFormatTag},
                {"seed", corpus.seed}}
               .dump();
    out += "\n";
    for (const ScenarioStep& step : corpus.steps) {
        out += json{{"event", detail::event_to_json(step.event)},
                    {"id", step.id},
                    {"mesh_snapshot", detail::state_to_json(step.mesh_snapshot)},
                    {"observation", step.observation},
                    {"prompt_variant", variant_token(step.prompt_variant)},
                    {"reference_action", canonical_render(step.reference_action)},
                    {"step_index", step.step_index}}
                   .dump();
        out += "\n";
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot open corpus file for writing: " + path);
    }
    out << corpus_to_jsonl(corpus);
}

Corpus corpus_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    Corpus corpus;
    bool have_header = false;
    std::set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;

        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& ex) {
            throw CorpusFormatError(std::string("malformed record: ") + ex.what(), line_no);
        }

        try {
            if (!have_header) {
                if (doc.value("format", "") != kFormatTag) {
                    throw CorpusFormatError("missing or unknown corpus header", line_no);
                }
                corpus.seed = doc.at("seed").get<std::uint64_t>();
                corpus.config = config_from_json(doc.at("config"));
                corpus.config_digest = doc.at("config_digest").get<std::string>();
                if (corpus.config_digest != config_digest(corpus.config)) {
                    throw CorpusFormatError("config digest does not match config", line_no);
                }
                have_header = true;
                continue;
            }

            ScenarioStep step;
            step.id = doc.at("id").get<std::string>();
            step.step_index = doc.at("step_index").get<std::uint64_t>();
            step.observation = doc.at("observation").get<std::string>();
            step.mesh_snapshot = detail::state_from_json(doc.at("mesh_snapshot"));
            step.event = detail::event_from_json(doc.at("event"));
            step.prompt_variant =
                variant_from_token(doc.at("prompt_variant").get<std::string>());

            if (const auto violation = mesh_state_violation(step.mesh_snapshot)) {
                throw CorpusFormatError("bad mesh snapshot: " + *violation, line_no);
            }
            const auto valid = enumerate_valid_actions(step.mesh_snapshot);
            const auto action =
                action_from_canonical(doc.at("reference_action").get<std::string>());
            if (!action || std::find(valid.begin(), valid.end(), *action) == valid.end()) {
                throw CorpusFormatError("reference_action not in the valid set", line_no);
            }
            step.reference_action = *action;

            if (step.observation.empty()) {
                throw CorpusFormatError("empty observation", line_no);
            }
            if (!seen_ids.insert(step.id).second) {
                throw CorpusFormatError("duplicate step id " + step.id, line_no);
            }
            if (step.step_index != corpus.steps.size()) {
                throw CorpusFormatError("steps out of order", line_no);
            }
            corpus.steps.push_back(std::move(step));
        } catch (const CorpusFormatError&) {
            throw;
        } catch (const std::exception& ex) {
            throw CorpusFormatError(std::string("malformed record: ") + ex.what(), line_no);
        }
    }

    if (!have_header) {
        throw CorpusFormatError("empty corpus file", 1);
    }
    if (corpus.steps.empty()) {
        throw CorpusFormatError("corpus has no steps", line_no + 1);
    }
    return corpus;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open corpus file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return corpus_from_jsonl(buffer.str());
}

}  // namespace meshpilot
