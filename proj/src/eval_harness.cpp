#include "meshpilot/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <thread>

#include <json.hpp>

#include "meshpilot/errors.hpp"

namespace meshpilot {

namespace {

using nlohmann::json;

std::string parse_status_token(ParseStatus status) {
    switch (status) {
        case ParseStatus::Parsed: return "parsed";
        case ParseStatus::MissingTag: return "missing_tag";
        case ParseStatus::InvalidAction: return "invalid_action";
        case ParseStatus::MultipleTags: return "multiple_tags";
    }
    return "missing_tag";
}

ParseStatus parse_status_from_token(const std::string& token) {
    if (token == "parsed") return ParseStatus::Parsed;
    if (token == "missing_tag") return ParseStatus::MissingTag;
    if (token == "invalid_action") return ParseStatus::InvalidAction;
    if (token == "multiple_tags") return ParseStatus::MultipleTags;
    throw ConfigError("unknown parse status: " + token);
}

std::string fixed4(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

std::string fixed2(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

}  // namespace

EpisodeResult run_episode(const CorpusConfig& corpus_config, const ScenarioStep& step,
                          ChatBackend& backend, PromptVariant variant) {
    EpisodeResult result;
    result.step_id = step.id;
    result.step_index = step.step_index;
    result.backend = backend.config().name;
    result.variant = variant;

    const auto valid = enumerate_valid_actions(step.mesh_snapshot);
    const std::string system_prompt =
        build_system_prompt(corpus_config.node_count, corpus_config.start_channel);
    const std::string user_prompt = build_user_prompt(step.observation, valid, variant);

    std::vector<ChatMessage> messages;
    messages.push_back({Role::System, system_prompt});
    try {
        // Context acknowledgement turn: live for remote backends, stubbed for
        // deterministic ones. Only the action turn is scored.
        std::string ack = kAcknowledgementStub;
        if (!backend.deterministic()) {
            ack = backend.chat(messages, step.id + "@ack").response;
        }
        messages.push_back({Role::Assistant, ack});
        messages.push_back({Role::User, user_prompt});

        const ChatExchange exchange =
            backend.chat(messages, step.id + "@" + variant_token(variant));
        result.raw_response = exchange.response;
        result.latency_ms = exchange.latency_ms;
    } catch (const MeshpilotError&) {
        // Failed episodes score zero and surface as parse failures; the run
        // carries on.
        result.backend_failed = true;
    }

    result.parse_outcome = parse_tagged_response(result.raw_response, valid);
    result.hypothesis =
        result.parse_outcome.has_tag() ? result.parse_outcome.raw : result.raw_response;
    result.scores =
        score_pair(result.hypothesis, canonical_render(step.reference_action));
    result.exact_match = result.parse_outcome.action.has_value() &&
                         *result.parse_outcome.action == step.reference_action;
    return result;
}

std::vector<EpisodeResult> run_episodes(const Corpus& corpus, const RunConfig& config) {
    if (config.backends.empty()) throw ConfigError("at least one backend required");
    if (config.variants.empty()) throw ConfigError("at least one prompt variant required");
    if (config.max_parallel_episodes < 1) throw ConfigError("max parallel must be >= 1");

    struct Job {
        const ScenarioStep* step;
        ChatBackend* backend;
        PromptVariant variant;
    };

    std::vector<std::unique_ptr<ChatBackend>> backends;
    backends.reserve(config.backends.size());
    for (const BackendConfig& backend_config : config.backends) {
        backends.push_back(make_backend(backend_config, &corpus));
    }

    std::vector<Job> jobs;
    jobs.reserve(corpus.steps.size() * backends.size() * config.variants.size());
    for (const auto& backend : backends) {
        for (const PromptVariant variant : config.variants) {
            for (const ScenarioStep& step : corpus.steps) {
                jobs.push_back({&step, backend.get(), variant});
            }
        }
    }

    std::vector<EpisodeResult> results(jobs.size());
    std::atomic<std::size_t> next_job{0};
    const int worker_count =
        std::min<int>(config.max_parallel_episodes, static_cast<int>(jobs.size()));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(worker_count));
    for (int i = 0; i < worker_count; ++i) {
        workers.emplace_back([&] {
            while (true) {
                const std::size_t index = next_job.fetch_add(1);
                if (index >= jobs.size()) break;
                const Job& job = jobs[index];
                results[index] =
                    run_episode(corpus.config, *job.step, *job.backend, job.variant);
            }
        });
    }
    for (std::thread& worker : workers) worker.join();
    return results;
}

AggregateReport evaluate(const RunConfig& config) {
    const Corpus corpus = load_corpus(config.corpus_path);
    return aggregate(corpus, run_episodes(corpus, config));
}

AggregateReport aggregate(const Corpus& corpus, const std::vector<EpisodeResult>& episodes) {
    return aggregate(corpus.seed, corpus.config_digest, episodes);
}

AggregateReport aggregate(std::uint64_t corpus_seed, const std::string& corpus_config_digest,
                          const std::vector<EpisodeResult>& episodes) {
    AggregateReport report;
    report.corpus_seed = corpus_seed;
    report.corpus_config_digest = corpus_config_digest;

    // Fixed accumulation order keeps the report byte-identical regardless of
    // episode scheduling.
    std::vector<const EpisodeResult*> ordered;
    ordered.reserve(episodes.size());
    for (const EpisodeResult& episode : episodes) ordered.push_back(&episode);
    std::sort(ordered.begin(), ordered.end(),
              [](const EpisodeResult* a, const EpisodeResult* b) {
                  if (a->backend != b->backend) return a->backend < b->backend;
                  if (a->variant != b->variant) return a->variant < b->variant;
                  return a->step_index < b->step_index;
              });

    std::map<std::pair<std::string, PromptVariant>, ReportRow> rows;
    for (const EpisodeResult* episode : ordered) {
        ReportRow& row = rows[{episode->backend, episode->variant}];
        row.backend = episode->backend;
        row.variant = episode->variant;
        row.mean_rouge1_f += episode->scores.rouge1_f;
        row.mean_meteor += episode->scores.meteor;
        row.mean_bleu += episode->scores.bleu;
        row.exact_match_rate += episode->exact_match ? 1.0 : 0.0;
        const bool parsed = episode->parse_outcome.action.has_value();
        const bool has_tag = episode->parse_outcome.has_tag();
        row.parse_failure_rate += !has_tag ? 1.0 : 0.0;
        row.invalid_action_rate += (has_tag && !parsed) ? 1.0 : 0.0;
        row.n_steps += 1;
    }

    for (auto& [key, row] : rows) {
        const double n = static_cast<double>(row.n_steps);
        row.mean_rouge1_f /= n;
        row.mean_meteor /= n;
        row.mean_bleu /= n;
        row.exact_match_rate /= n;
        row.parse_failure_rate /= n;
        row.invalid_action_rate /= n;
        report.rows.push_back(row);
    }
    return report;
}

std::string emit_report(const AggregateReport& report, ReportFormat format) {
    if (format == ReportFormat::Csv) {
        std::string out =
            "backend,variant,rouge1_f,meteor,bleu,exact_match_rate,parse_failure_rate,"
            "invalid_action_rate,n_steps\n";
        for (const ReportRow& row : report.rows) {
            out += row.backend + "," + variant_token(row.variant) + "," +
                   fixed4(row.mean_rouge1_f) + "," + fixed4(row.mean_meteor) + "," +
                   fixed4(row.mean_bleu) + "," + fixed4(row.exact_match_rate) + "," +
                   fixed4(row.parse_failure_rate) + "," + fixed4(row.invalid_action_rate) +
                   "," + std::to_string(row.n_steps) + "\n";
        }
        return out;
    }

    // Markdown: one prompt-format sensitivity grid per backend, rows in the
    // published order (ends with '\n', without, with '\n\n').
    std::string out = "# Evaluation report\n\n";
    out += "Corpus seed " + std::to_string(report.corpus_seed) + ", config digest " +
           report.corpus_config_digest + ".\n";

    std::vector<std::string> backends;
    for (const ReportRow& row : report.rows) {
        if (std::find(backends.begin(), backends.end(), row.backend) == backends.end()) {
            backends.push_back(row.backend);
        }
    }

    const PromptVariant row_order[] = {PromptVariant::OneNewline, PromptVariant::NoNewline,
                                       PromptVariant::TwoNewlines};
    for (const std::string& backend : backends) {
        out += "\n| " + backend + " | ROUGE-1 | METEOR | BLEU |\n";
        out += "| --- | --- | --- | --- |\n";
        for (const PromptVariant variant : row_order) {
            const auto it = std::find_if(
                report.rows.begin(), report.rows.end(), [&](const ReportRow& row) {
                    return row.backend == backend && row.variant == variant;
                });
            if (it == report.rows.end()) continue;
            out += "| " + variant_label(variant) + " | " + fixed2(it->mean_rouge1_f) +
                   " | " + fixed2(it->mean_meteor) + " | " + fixed2(it->mean_bleu) +
                   " |\n";
        }
    }
    return out;
}

std::string episode_to_json(const EpisodeResult& episode) {
    json outcome{
        {"raw", episode.parse_outcome.raw},
        {"status", parse_status_token(episode.parse_outcome.status)},
        {"tag_count", episode.parse_outcome.tag_count},
    };
    if (episode.parse_outcome.action) {
        outcome["action"] = canonical_render(*episode.parse_outcome.action);
    }
    // Raw model responses are foreign bytes; replace invalid UTF-8 rather
    // than aborting the results write.
    return json{
        {"backend", episode.backend},
        {"backend_failed", episode.backend_failed},
        {"exact_match", episode.exact_match},
        {"hypothesis", episode.hypothesis},
        {"latency_ms", episode.latency_ms},
        {"parse_outcome", outcome},
        {"raw_response", episode.raw_response},
        {"scores",
         {
             {"bleu", episode.scores.bleu},
             {"meteor", episode.scores.meteor},
             {"rouge1_f", episode.scores.rouge1_f},
             {"rouge1_p", episode.scores.rouge1_p},
             {"rouge1_r", episode.scores.rouge1_r},
         }},
        {"step_id", episode.step_id},
        {"step_index", episode.step_index},
        {"variant", variant_token(episode.variant)},
    }
        .dump(-1, ' ', false, json::error_handler_t::replace);
}

EpisodeResult episode_from_json(const std::string& line, std::size_t line_no) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::exception& ex) {
        throw CorpusFormatError(std::string("malformed episode record: ") + ex.what(),
                                line_no);
    }
    try {
        EpisodeResult episode;
        episode.step_id = doc.at("step_id").get<std::string>();
        episode.step_index = doc.at("step_index").get<std::uint64_t>();
        episode.backend = doc.at("backend").get<std::string>();
        episode.variant = variant_from_token(doc.at("variant").get<std::string>());
        episode.raw_response = doc.at("raw_response").get<std::string>();
        episode.hypothesis = doc.at("hypothesis").get<std::string>();
        episode.exact_match = doc.at("exact_match").get<bool>();
        episode.backend_failed = doc.at("backend_failed").get<bool>();
        episode.latency_ms = doc.at("latency_ms").get<double>();
        const auto& scores = doc.at("scores");
        episode.scores.rouge1_p = scores.at("rouge1_p").get<double>();
        episode.scores.rouge1_r = scores.at("rouge1_r").get<double>();
        episode.scores.rouge1_f = scores.at("rouge1_f").get<double>();
        episode.scores.meteor = scores.at("meteor").get<double>();
        episode.scores.bleu = scores.at("bleu").get<double>();
        const auto& outcome = doc.at("parse_outcome");
        episode.parse_outcome.status =
            parse_status_from_token(outcome.at("status").get<std::string>());
        episode.parse_outcome.raw = outcome.at("raw").get<std::string>();
        episode.parse_outcome.tag_count = outcome.at("tag_count").get<int>();
        if (outcome.contains("action")) {
            episode.parse_outcome.action =
                action_from_canonical(outcome.at("action").get<std::string>());
        }
        return episode;
    } catch (const json::exception& ex) {
        throw CorpusFormatError(std::string("malformed episode record: ") + ex.what(),
                                line_no);
    }
}

}  // namespace meshpilot
