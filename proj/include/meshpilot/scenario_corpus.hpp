#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshpilot/action_grammar.hpp"
#include "meshpilot/mesh_sim.hpp"
#include "meshpilot/prompt_builder.hpp"

namespace meshpilot {

/// One oracle-labeled evaluation unit: the observation shown to the model,
/// the mesh snapshot it was drawn from (post-event, pre-action), and the
/// preferred action the metrics score against.
struct ScenarioStep {
    std::string id;
    std::uint64_t step_index = 0;
    std::string observation;
    MeshState mesh_snapshot;
    NetworkEvent event;
    Action reference_action = NoAction{};
    PromptVariant prompt_variant = PromptVariant::OneNewline;
};

struct CorpusConfig {
    int node_count = 3;
    int start_channel = 36;
    std::uint64_t step_count = 200;
    EventWeights event_weights;
    PromptVariant default_variant = PromptVariant::OneNewline;
};

struct Corpus {
    std::uint64_t seed = 0;
    std::string config_digest;
    CorpusConfig config;
    std::vector<ScenarioStep> steps;
};

/// Deterministic English sentence for an event, one fixed template per kind.
/// The best-neighbors phrasing is the benchmarked wording verbatim.
std::string render_observation(const NetworkEvent& event, const MeshState& state);

/// The labeled preferred action for an event:
///   best-neighbors update  -> Update Neighbors of that node
///   jam/interference on the shared channel -> switch to the lowest channel
///       in 36..46 outside jammed_channels and the shared channel
///   jam on another channel -> No Action
///   malicious traffic      -> Disconnect all nodes from that node
///   position update        -> Update Local Position of that node
///   plain status report    -> No Action
/// Throws NoCleanChannelError when every channel is jammed.
Action oracle_action(const NetworkEvent& event, const MeshState& state);

/// init_mesh, then step_count rounds of event -> observation -> label ->
/// apply label. Bit-reproducible for a fixed (config, seed).
Corpus generate_corpus(const CorpusConfig& config, std::uint64_t seed);

/// Digest of the generation parameters (FNV-1a 64 over the canonical config
/// JSON), recorded in the corpus header.
std::string config_digest(const CorpusConfig& config);

/// FNV-1a 64 over raw bytes, as 16 hex chars. Convenience for comparing
/// corpus files and reports.
std::string content_digest(const std::string& bytes);

/// JSON Lines: a header object carrying seed + config, then one step per
/// line. UTF-8, LF terminators.
void save_corpus(const Corpus& corpus, const std::string& path);
std::string corpus_to_jsonl(const Corpus& corpus);

/// Throws CorpusFormatError (with the offending 1-based line) on malformed
/// records, and rejects corpora with zero steps.
Corpus load_corpus(const std::string& path);
Corpus corpus_from_jsonl(const std::string& text);

}  // namespace meshpilot
