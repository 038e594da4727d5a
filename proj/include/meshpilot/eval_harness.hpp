#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meshpilot/llm_backends.hpp"
#include "meshpilot/scenario_corpus.hpp"
#include "meshpilot/text_metrics.hpp"

namespace meshpilot {

struct EpisodeResult {
    std::string step_id;
    std::uint64_t step_index = 0;
    std::string backend;
    PromptVariant variant = PromptVariant::OneNewline;
    std::string raw_response;
    ParseOutcome parse_outcome;
    std::string hypothesis;  // tag content when a tag exists, else the full response
    MetricScore scores;
    bool exact_match = false;
    double latency_ms = 0.0;
    bool backend_failed = false;
};

struct ReportRow {
    std::string backend;
    PromptVariant variant = PromptVariant::OneNewline;
    double mean_rouge1_f = 0.0;
    double mean_meteor = 0.0;
    double mean_bleu = 0.0;
    double exact_match_rate = 0.0;
    double parse_failure_rate = 0.0;
    double invalid_action_rate = 0.0;
    std::uint64_t n_steps = 0;
};

struct AggregateReport {
    std::uint64_t corpus_seed = 0;
    std::string corpus_config_digest;
    std::vector<ReportRow> rows;  // sorted by (backend, variant)
};

struct RunConfig {
    std::string corpus_path;
    std::vector<BackendConfig> backends;
    std::vector<PromptVariant> variants;
    int max_parallel_episodes = 4;
    std::string output_dir;
};

/// One step against one backend under one prompt variant: builds the system
/// and user prompts, exchanges the acknowledgement turn (live for remote
/// backends, stubbed otherwise), sends the observation prompt, parses the
/// tagged reply and scores the hypothesis against the canonical reference.
/// Backend failures are recorded in the result, never thrown.
EpisodeResult run_episode(const CorpusConfig& corpus_config, const ScenarioStep& step,
                          ChatBackend& backend, PromptVariant variant);

/// Every (step x backend x variant) episode, up to max_parallel_episodes in
/// flight, aggregated per (backend, variant). Episode order never affects the
/// report: results are re-sorted before aggregation.
std::vector<EpisodeResult> run_episodes(const Corpus& corpus, const RunConfig& config);

/// Loads the corpus named by config.corpus_path, runs every episode, and
/// aggregates. Corpus problems abort with CorpusFormatError; per-episode
/// backend failures are folded into the report instead.
AggregateReport evaluate(const RunConfig& config);

AggregateReport aggregate(const Corpus& corpus, const std::vector<EpisodeResult>& episodes);
AggregateReport aggregate(std::uint64_t corpus_seed, const std::string& corpus_config_digest,
                          const std::vector<EpisodeResult>& episodes);

enum class ReportFormat { Csv, Markdown };

/// csv: fixed header, 4-decimal floats, rows sorted by (backend, variant).
/// markdown: one sensitivity grid per backend with the "Prompt ends ..."
/// variant labels and the three metric columns.
std::string emit_report(const AggregateReport& report, ReportFormat format);

std::string episode_to_json(const EpisodeResult& episode);
EpisodeResult episode_from_json(const std::string& line, std::size_t line_no);

/// `gen`, `run`, `report`, `selftest`. Exit 0 on success, 1 on configuration
/// errors, 2 on runtime failures.
int cli(int argc, const char* const* argv);

}  // namespace meshpilot
