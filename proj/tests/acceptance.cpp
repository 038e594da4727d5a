// Acceptance suite: every release gate in one binary, one pass/fail line per
// criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "meshpilot/errors.hpp"
#include "meshpilot/eval_harness.hpp"
#include "metric_reference.hpp"

using namespace meshpilot;

namespace {

namespace fs = std::filesystem;

struct CriterionFailure {
    std::string message;
};

#define ACHECK(cond, msg)                                      \
    do {                                                       \
        if (!(cond)) throw CriterionFailure{std::string(msg)}; \
    } while (0)

int failures = 0;

void criterion(int number, const std::string& label, const std::function<void()>& body) {
    try {
        body();
        std::cout << "[PASS] criterion " << number << ": " << label << "\n";
    } catch (const CriterionFailure& failure) {
        std::cout << "[FAIL] criterion " << number << ": " << label << " -- "
                  << failure.message << "\n";
        ++failures;
    } catch (const std::exception& ex) {
        std::cout << "[FAIL] criterion " << number << ": " << label
                  << " -- unexpected exception: " << ex.what() << "\n";
        ++failures;
    }
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CriterionFailure{"cannot open " + path.string()};
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("meshpilot");
    for (const std::string& arg : args) argv.push_back(arg.c_str());
    return cli(static_cast<int>(argv.size()), argv.data());
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- criteria ----

void metric_oracle_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    const auto actions = enumerate_valid_actions(3);
    ACHECK(actions.size() == 23, "expected 23 actions");
    int pairs = 0;
    for (const Action& a : actions) {
        for (const Action& b : actions) {
            const std::string hyp_text = canonical_render(a);
            const std::string ref_text = canonical_render(b);
            const MetricScore got = score_pair(hyp_text, ref_text);
            const auto hyp = reference::ref_tokenize(hyp_text);
            const auto ref = reference::ref_tokenize(ref_text);
            ACHECK(near(got.rouge1_f, reference::ref_rouge1(hyp, ref).f1, 1e-9),
                   "rouge1 mismatch on [" + hyp_text + "] vs [" + ref_text + "]");
            ACHECK(near(got.meteor, reference::ref_meteor(hyp, ref), 1e-9),
                   "meteor mismatch on [" + hyp_text + "] vs [" + ref_text + "]");
            ACHECK(near(got.bleu, reference::ref_bleu(hyp, ref), 1e-9),
                   "bleu mismatch on [" + hyp_text + "] vs [" + ref_text + "]");
            ++pairs;
        }
    }
    ACHECK(pairs == 529, "expected 529 ordered pairs");
    ACHECK(elapsed_s(start) < 5.0, "took longer than 5 s");
}

void derived_triple() {
    const MetricScore got =
        score_pair("Update Neighbors of node 1", "Update Neighbors of node 2");
    ACHECK(near(got.rouge1_f, 0.8, 1e-9), "rouge1_f != 0.8");
    ACHECK(near(got.meteor, 0.79375, 1e-9), "meteor != 0.79375");
    ACHECK(near(got.bleu, std::pow(0.2, 0.25), 1e-9), "bleu != 0.2^0.25");
}

void identity_laws() {
    for (const Action& action : enumerate_valid_actions(3)) {
        const std::string text = canonical_render(action);
        const MetricScore got = score_pair(text, text);
        ACHECK(got.rouge1_f == 1.0, "rouge1_f(a,a) != 1 for " + text);
        ACHECK(got.bleu == 1.0, "bleu(a,a) != 1 for " + text);
        const double frag = 1.0 / static_cast<double>(tokenize(text).size());
        ACHECK(got.meteor == 1.0 - 0.5 * frag * frag * frag,
               "meteor(a,a) identity violated for " + text);
    }
}

void golden_prompts() {
    const fs::path dir(MESHPILOT_GOLDEN_DIR);
    ACHECK(build_system_prompt(3, 36) == read_file(dir / "system_prompt_3_36.txt"),
           "system prompt differs from golden file");

    const auto actions = enumerate_valid_actions(3);
    const std::string observation =
        "Network Status from Node1 Best Neighbors List is [2, 3].";
    const std::string none =
        build_user_prompt(observation, actions, PromptVariant::NoNewline);
    const std::string one =
        build_user_prompt(observation, actions, PromptVariant::OneNewline);
    const std::string two =
        build_user_prompt(observation, actions, PromptVariant::TwoNewlines);
    ACHECK(none == read_file(dir / "user_prompt_no_newline.txt"),
           "no-newline user prompt differs from golden file");
    ACHECK(one == read_file(dir / "user_prompt_one_newline.txt"),
           "one-newline user prompt differs from golden file");
    ACHECK(two == read_file(dir / "user_prompt_two_newlines.txt"),
           "two-newline user prompt differs from golden file");
    ACHECK(one == none + "\n" && two == none + "\n\n",
           "variants differ beyond their trailing bytes");
    ACHECK(!none.empty() && none.back() != '\n', "no-newline variant ends with 0x0A");
}

void parser_round_trip() {
    const auto valid = enumerate_valid_actions(3);
    for (const Action& action : valid) {
        const auto outcome = parse_tagged_response(
            "<ACTION>" + canonical_render(action) + "</ACTION>", valid);
        ACHECK(outcome.status == ParseStatus::Parsed && outcome.action &&
                   *outcome.action == action,
               "round trip failed for " + canonical_render(action));
    }

    const std::vector<std::string> missing = {
        "I would switch the channel.", "", "no tags at all", "<ACTION>unterminated"};
    for (const std::string& fixture : missing) {
        ACHECK(parse_tagged_response(fixture, valid).status == ParseStatus::MissingTag,
               "expected MissingTag for: " + fixture);
    }

    const std::vector<std::string> invalid = {
        "<ACTION>Reboot node 5</ACTION>",
        "<ACTION>Switch all nodes to channel 35</ACTION>", "<ACTION></ACTION>"};
    for (const std::string& fixture : invalid) {
        const auto outcome = parse_tagged_response(fixture, valid);
        ACHECK(outcome.status == ParseStatus::InvalidAction && !outcome.action,
               "expected InvalidAction for: " + fixture);
    }

    const std::vector<std::string> multiple = {
        "<ACTION>No Action</ACTION><ACTION>No Action</ACTION>",
        "<action>no action</action> then <ACTION>Switch all nodes to channel "
        "37</ACTION>"};
    for (const std::string& fixture : multiple) {
        const auto outcome = parse_tagged_response(fixture, valid);
        ACHECK(outcome.status == ParseStatus::MultipleTags && outcome.tag_count == 2,
               "expected MultipleTags for: " + fixture);
        ACHECK(outcome.action && *outcome.action == Action{NoAction{}},
               "first tag should win for: " + fixture);
    }
}

void end_to_end_determinism() {
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = fs::temp_directory_path() / "meshpilot_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path first = dir / "corpus_a.jsonl";
    const fs::path second = dir / "corpus_b.jsonl";

    ACHECK(run_cli({"gen", "--seed", "7", "--steps", "200", "--out", first.string()}) == 0,
           "gen (first run) failed");
    ACHECK(run_cli({"gen", "--seed", "7", "--steps", "200", "--out", second.string()}) == 0,
           "gen (second run) failed");
    const std::string bytes_a = read_file(first);
    ACHECK(content_digest(bytes_a) == content_digest(read_file(second)),
           "identical gen runs produced different digests");

    const Corpus corpus = load_corpus(first.string());
    ACHECK(corpus.steps.size() == 200, "expected 200 steps");

    BackendConfig oracle;
    oracle.kind = BackendKind::OraclePolicy;
    oracle.name = "oracle";
    RunConfig run_config;
    run_config.backends = {oracle};
    run_config.variants = {PromptVariant::NoNewline, PromptVariant::OneNewline,
                           PromptVariant::TwoNewlines};
    run_config.max_parallel_episodes = 4;

    const auto episodes = run_episodes(corpus, run_config);
    const AggregateReport report = aggregate(corpus, episodes);
    ACHECK(report.rows.size() == 3, "expected one row per variant");

    // Corpus-side expectation: the oracle echoes each reference verbatim, so
    // mean meteor is the mean of the per-reference identity values.
    double expected_meteor = 0.0;
    for (const ScenarioStep& step : corpus.steps) {
        const double frag =
            1.0 /
            static_cast<double>(tokenize(canonical_render(step.reference_action)).size());
        expected_meteor += 1.0 - 0.5 * frag * frag * frag;
    }
    expected_meteor /= static_cast<double>(corpus.steps.size());

    for (const ReportRow& row : report.rows) {
        ACHECK(row.exact_match_rate == 1.0, "oracle exact_match_rate != 1.0");
        ACHECK(row.mean_rouge1_f == 1.0, "oracle mean rouge1_f != 1.0");
        ACHECK(row.mean_bleu == 1.0, "oracle mean bleu != 1.0");
        ACHECK(near(row.mean_meteor, expected_meteor, 1e-12),
               "oracle mean meteor does not match the corpus-computed value");
        ACHECK(row.n_steps == 200, "row does not cover the corpus");
    }

    // Re-running the evaluation yields byte-identical csv output.
    const std::string csv_a = emit_report(report, ReportFormat::Csv);
    const std::string csv_b = emit_report(
        aggregate(corpus, run_episodes(corpus, run_config)), ReportFormat::Csv);
    ACHECK(csv_a == csv_b, "evaluation csv not byte-identical across runs");

    fs::remove_all(dir);
    ACHECK(elapsed_s(start) < 60.0, "took longer than 60 s");
}

void scripted_sensitivity_rehearsal() {
    CorpusConfig config;
    config.step_count = 3;
    const Corpus corpus = generate_corpus(config, 13);
    ACHECK(canonical_render(corpus.steps[0].reference_action) ==
                   "Switch all nodes to channel 37" &&
               canonical_render(corpus.steps[1].reference_action) ==
                   "Update Local Position of node 1" &&
               canonical_render(corpus.steps[2].reference_action) == "No Action",
           "seed-13 references drifted; fixture no longer applies");

    const BackendConfig replay = backend_config_from_file(
        std::string(MESHPILOT_FIXTURE_DIR) + "/sensitivity_backend.conf");
    ACHECK(replay.replay_table.size() == 9, "committed replay table should have 9 entries");

    RunConfig run_config;
    run_config.backends = {replay};
    run_config.variants = {PromptVariant::NoNewline, PromptVariant::OneNewline,
                           PromptVariant::TwoNewlines};
    const AggregateReport report = aggregate(corpus, run_episodes(corpus, run_config));
    ACHECK(report.rows.size() == 3, "expected three variant rows");

    // Constants precomputed with the brute-force reference implementation.
    struct Expected {
        PromptVariant variant;
        double rouge, meteor, bleu, exact, fail, invalid;
    };
    const Expected expected[] = {
        {PromptVariant::NoNewline, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0},
        {PromptVariant::OneNewline, 1.0, 0.97762345679012341, 1.0, 1.0, 0.0, 0.0},
        {PromptVariant::TwoNewlines, 1.0 / 3.0, 0.3125, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0},
    };
    for (const Expected& want : expected) {
        const auto it =
            std::find_if(report.rows.begin(), report.rows.end(),
                         [&](const ReportRow& row) { return row.variant == want.variant; });
        ACHECK(it != report.rows.end(), "missing row for " + variant_token(want.variant));
        ACHECK(near(it->mean_rouge1_f, want.rouge, 1e-12), "rouge mismatch");
        ACHECK(near(it->mean_meteor, want.meteor, 1e-12), "meteor mismatch");
        ACHECK(near(it->mean_bleu, want.bleu, 1e-12), "bleu mismatch");
        ACHECK(near(it->exact_match_rate, want.exact, 1e-12), "exact_match mismatch");
        ACHECK(near(it->parse_failure_rate, want.fail, 1e-12), "parse_failure mismatch");
        ACHECK(near(it->invalid_action_rate, want.invalid, 1e-12),
               "invalid_action mismatch");
    }

    // Markdown report: variant-labeled rows with the three metric columns.
    const std::string markdown = emit_report(report, ReportFormat::Markdown);
    ACHECK(markdown.find("| replay | ROUGE-1 | METEOR | BLEU |") != std::string::npos,
           "markdown header row missing");
    ACHECK(markdown.find("| Prompt ends with '\\n' | 1.00 | 0.98 | 1.00 |") !=
               std::string::npos,
           "one-newline markdown row missing");
    ACHECK(markdown.find("| Prompt ends without '\\n' | 0.00 | 0.00 | 0.00 |") !=
               std::string::npos,
           "no-newline markdown row missing");
    ACHECK(markdown.find("| Prompt ends with '\\n\\n' | 0.33 | 0.31 | 0.33 |") !=
               std::string::npos,
           "two-newline markdown row missing");
    ACHECK(markdown.find("Prompt ends with '\\n' |") <
               markdown.find("Prompt ends without '\\n' |"),
           "markdown rows not in the published order");
}

void simulator_invariants() {
    SplitMix64 rng(0xACCE5);
    int sequences = 0;
    for (int run = 0; run < 1000; ++run) {
        MeshState state = init_mesh(3, 36);
        for (int step = 0; step < 12; ++step) {
            if (rng.next_double() < 0.5) next_event(state, rng);
            const auto valid = enumerate_valid_actions(state);
            const Action action = valid[rng.next_below(valid.size())];
            state = apply_action(state, action).state;

            ACHECK(state.shared_channel >= kChannelMin &&
                       state.shared_channel <= kChannelMax,
                   "shared channel left 36..46");
            for (const NodeState& node : state.nodes) {
                ACHECK(node.channel == state.shared_channel,
                       "node channel diverged from the mesh channel");
                std::set<int> seen;
                for (NodeId neighbor : node.neighbors) {
                    ACHECK(neighbor.index != node.id.index, "self neighbor");
                    ACHECK(seen.insert(neighbor.index).second, "duplicate neighbor");
                }
            }
        }

        // NoAction moves only the step counter.
        MeshState before = state;
        MeshState after = apply_action(state, NoAction{}).state;
        ACHECK(after.step_counter == before.step_counter + 1, "step counter did not move");
        after.step_counter = before.step_counter;
        ACHECK(after == before, "NoAction changed more than step_counter");

        // Disconnect is idempotent modulo step_counter.
        MeshState once = apply_action(state, DisconnectNode{2}).state;
        MeshState twice = apply_action(once, DisconnectNode{2}).state;
        once.step_counter = 0;
        twice.step_counter = 0;
        ACHECK(once == twice, "disconnect not idempotent");
        ++sequences;
    }
    ACHECK(sequences == 1000, "expected 1000 sequences");
}

void remote_backend_conformance() {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::atomic<int> in_flight{0};
    std::atomic<int> max_in_flight{0};
    std::atomic<int> mode{0};  // 0: retry-then-ok, 1: always 500, 2: slow ok

    server.Post("/v1/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    const int now = ++in_flight;
                    int seen = max_in_flight.load();
                    while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
                    }
                    const int call = ++hits;
                    if (mode == 0) {
                        if (call == 1) {
                            res.status = 429;
                        } else if (call == 2) {
                            res.status = 503;
                        } else {
                            res.set_content(
                                R"({"choices":[{"message":{"content":"<ACTION>No Action</ACTION>"}}]})",
                                "application/json");
                        }
                    } else if (mode == 1) {
                        res.status = 500;
                    } else {
                        std::this_thread::sleep_for(std::chrono::milliseconds(25));
                        res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})",
                                        "application/json");
                    }
                    --in_flight;
                });
    const int port = server.bind_to_any_port("127.0.0.1");
    ACHECK(port > 0, "stub server failed to bind");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    BackendConfig config;
    config.kind = BackendKind::RemoteChat;
    config.name = "stub";
    config.endpoint_url = "http://127.0.0.1:" + std::to_string(port);
    config.model_name = "stub-model";
    config.max_retries = 2;
    config.retry_base_ms = 5;
    config.max_concurrency = 2;

    const std::vector<ChatMessage> messages = {{Role::System, "s"}, {Role::User, "u"}};
    bool ok = true;
    std::string detail;
    try {
        // Retries on 429 then 503, observed via the attempt count.
        const auto backend = make_backend(config);
        const ChatExchange exchange = backend->chat(messages, "s1");
        if (exchange.attempt_count != 3 || hits.load() != 3) {
            ok = false;
            detail = "expected 3 attempts, saw " + std::to_string(hits.load());
        }

        // Exhaustion raises BackendUnavailable after max_retries + 1 requests.
        if (ok) {
            mode = 1;
            hits = 0;
            bool threw = false;
            try {
                backend->chat(messages, "s1");
            } catch (const BackendUnavailable&) {
                threw = true;
            }
            if (!threw || hits.load() != 3) {
                ok = false;
                detail = "BackendUnavailable not raised after retries exhausted";
            }
        }

        // Concurrency cap: eight parallel calls, never more than two in flight.
        if (ok) {
            mode = 2;
            hits = 0;
            max_in_flight = 0;
            std::vector<std::thread> callers;
            for (int i = 0; i < 8; ++i) {
                callers.emplace_back([&] { backend->chat(messages, "s1"); });
            }
            for (auto& caller : callers) caller.join();
            if (hits.load() != 8 || max_in_flight.load() > 2 || max_in_flight.load() < 1) {
                ok = false;
                detail = "max in flight " + std::to_string(max_in_flight.load()) +
                         " with limit 2";
            }
        }
    } catch (const std::exception& ex) {
        ok = false;
        detail = ex.what();
    }

    server.stop();
    server_thread.join();
    ACHECK(ok, detail);
}

}  // namespace

int main() {
    std::cout << "meshpilot acceptance suite\n";
    criterion(1, "metric oracle equivalence (529 pairs, <5s)", metric_oracle_equivalence);
    criterion(2, "derived triple for the near-miss action pair", derived_triple);
    criterion(3, "identity laws on every canonical action string", identity_laws);
    criterion(4, "golden prompts byte-for-byte, endings differ only", golden_prompts);
    criterion(5, "parser round-trip and outcome fixtures", parser_round_trip);
    criterion(6, "end-to-end determinism with the oracle backend (<60s, no network)",
              end_to_end_determinism);
    criterion(7, "scripted sensitivity rehearsal matches frozen constants",
              scripted_sensitivity_rehearsal);
    criterion(8, "simulator invariants over 1000 random action sequences",
              simulator_invariants);
    criterion(9, "remote backend conformance against the local stub server",
              remote_backend_conformance);

    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all 9 criteria passed\n";
    return 0;
}
