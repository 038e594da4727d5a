#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "meshpilot/errors.hpp"
#include "meshpilot/eval_harness.hpp"
#include "metric_reference.hpp"

namespace meshpilot {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot open file for writing: " + path);
    }
    out << content;
}

std::vector<PromptVariant> parse_variants(const std::string& spec) {
    if (spec == "all") {
        return {PromptVariant::NoNewline, PromptVariant::OneNewline,
                PromptVariant::TwoNewlines};
    }
    std::vector<PromptVariant> variants;
    std::istringstream in(spec);
    std::string token;
    while (std::getline(in, token, ',')) {
        if (!token.empty()) variants.push_back(variant_from_token(token));
    }
    if (variants.empty()) {
        throw ConfigError("no prompt variants selected");
    }
    return variants;
}

BackendConfig resolve_backend(const std::string& spec) {
    if (spec == "oracle") {
        BackendConfig config;
        config.kind = BackendKind::OraclePolicy;
        config.name = "oracle";
        return config;
    }
    return backend_config_from_file(spec);
}

int cmd_gen(std::uint64_t seed, std::uint64_t steps, const std::string& out_path,
            int nodes, int channel, const std::string& variant) {
    CorpusConfig config;
    config.node_count = nodes;
    config.start_channel = channel;
    config.step_count = steps;
    config.default_variant = variant_from_token(variant);

    const Corpus corpus = generate_corpus(config, seed);
    save_corpus(corpus, out_path);
    std::cout << "wrote " << out_path << ": " << corpus.steps.size() << " steps, seed "
              << seed << ", content digest " << content_digest(read_file(out_path))
              << "\n";
    return 0;
}

int cmd_run(const std::string& corpus_path, const std::vector<std::string>& backend_specs,
            const std::string& variant_spec, int concurrency,
            const std::string& out_dir) {
    const Corpus corpus = load_corpus(corpus_path);

    RunConfig run_config;
    run_config.corpus_path = corpus_path;
    run_config.variants = parse_variants(variant_spec);
    run_config.max_parallel_episodes = concurrency;
    run_config.output_dir = out_dir;
    for (const std::string& spec : backend_specs) {
        run_config.backends.push_back(resolve_backend(spec));
    }

    const std::vector<EpisodeResult> episodes = run_episodes(corpus, run_config);
    const AggregateReport report = aggregate(corpus, episodes);
    const std::string csv = emit_report(report, ReportFormat::Csv);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::string lines;
        for (const EpisodeResult& episode : episodes) {
            lines += episode_to_json(episode);
            lines += "\n";
        }
        write_file((fs::path(out_dir) / "results.jsonl").string(), lines);
        write_file((fs::path(out_dir) / "report.csv").string(), csv);
        write_file((fs::path(out_dir) / "report.md").string(),
                   emit_report(report, ReportFormat::Markdown));
        nlohmann::json meta{{"corpus_config_digest", corpus.config_digest},
                            {"corpus_path", corpus_path},
                            {"corpus_seed", corpus.seed}};
        write_file((fs::path(out_dir) / "run_meta.json").string(), meta.dump() + "\n");
    }

    std::cout << csv;
    return 0;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
    const std::string meta_text = read_file((fs::path(in_dir) / "run_meta.json").string());
    const auto meta = nlohmann::json::parse(meta_text);

    std::vector<EpisodeResult> episodes;
    std::istringstream lines(read_file((fs::path(in_dir) / "results.jsonl").string()));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (!line.empty()) episodes.push_back(episode_from_json(line, line_no));
    }

    AggregateReport report =
        aggregate(meta.at("corpus_seed").get<std::uint64_t>(),
                  meta.at("corpus_config_digest").get<std::string>(), episodes);
    std::cout << emit_report(report, format == "csv" ? ReportFormat::Csv
                                                     : ReportFormat::Markdown);
    return 0;
}

bool check(bool ok, const std::string& label) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << label << "\n";
    return ok;
}

int cmd_selftest(const std::string& golden_dir) {
    bool all_ok = true;

    // Metric implementations against the brute-force reference on every
    // ordered pair of canonical action strings.
    {
        const auto actions = enumerate_valid_actions(3);
        int checked = 0;
        double worst = 0.0;
        for (const Action& a : actions) {
            for (const Action& b : actions) {
                const std::string hyp_text = canonical_render(a);
                const std::string ref_text = canonical_render(b);
                const MetricScore got = score_pair(hyp_text, ref_text);
                const auto hyp = reference::ref_tokenize(hyp_text);
                const auto ref = reference::ref_tokenize(ref_text);
                const auto rouge = reference::ref_rouge1(hyp, ref);
                worst = std::max(worst, std::fabs(got.rouge1_f - rouge.f1));
                worst = std::max(worst, std::fabs(got.meteor - reference::ref_meteor(hyp, ref)));
                worst = std::max(worst, std::fabs(got.bleu - reference::ref_bleu(hyp, ref)));
                ++checked;
            }
        }
        all_ok &= check(checked == 529 && worst < 1e-9,
                        "metric oracle equivalence on 529 action pairs (max |diff| " +
                            std::to_string(worst) + ")");
    }

    // Golden prompts, byte for byte.
    {
        const auto actions = enumerate_valid_actions(3);
        const std::string observation =
            "Network Status from Node1 Best Neighbors List is [2, 3].";
        const fs::path dir(golden_dir);
        all_ok &= check(read_file((dir / "system_prompt_3_36.txt").string()) ==
                            build_system_prompt(3, 36),
                        "golden system prompt (3 nodes, channel 36)");
        all_ok &= check(
            read_file((dir / "user_prompt_no_newline.txt").string()) ==
                build_user_prompt(observation, actions, PromptVariant::NoNewline),
            "golden user prompt, no trailing newline");
        all_ok &= check(
            read_file((dir / "user_prompt_one_newline.txt").string()) ==
                build_user_prompt(observation, actions, PromptVariant::OneNewline),
            "golden user prompt, trailing \"\\n\"");
        all_ok &= check(
            read_file((dir / "user_prompt_two_newlines.txt").string()) ==
                build_user_prompt(observation, actions, PromptVariant::TwoNewlines),
            "golden user prompt, trailing \"\\n\\n\"");
    }

    return all_ok ? 0 : 2;
}

}  // namespace

int cli(int argc, const char* const* argv) {
    CLI::App app{"Benchmark harness for LLM-driven Wi-Fi mesh management"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate a labeled scenario corpus");
    std::uint64_t seed = 7;
    std::uint64_t steps = 200;
    std::string out_path;
    int nodes = 3;
    int channel = 36;
    std::string variant = "one_newline";
    gen->add_option("--seed", seed, "Corpus seed");
    gen->add_option("--steps", steps, "Number of scenario steps");
    gen->add_option("--out", out_path, "Output corpus path (JSON Lines)")->required();
    gen->add_option("--nodes", nodes, "Mesh node count");
    gen->add_option("--channel", channel, "Start channel (36..46)");
    gen->add_option("--variant", variant,
                    "Default prompt variant recorded per step "
                    "(no_newline|one_newline|two_newlines)");
    int exit_code = 0;
    gen->callback(
        [&] { exit_code = cmd_gen(seed, steps, out_path, nodes, channel, variant); });

    auto* run = app.add_subcommand("run", "Evaluate backends over a corpus");
    std::string corpus_path;
    std::vector<std::string> backend_specs;
    std::string variant_spec = "all";
    int concurrency = 4;
    std::string out_dir;
    run->add_option("--corpus", corpus_path, "Corpus path")->required();
    run->add_option("--backend", backend_specs,
                    "Backend: 'oracle' or a backend config file (repeatable)")
        ->required();
    run->add_option("--variants", variant_spec,
                    "'all' or comma-separated prompt variants");
    run->add_option("--concurrency", concurrency, "Max parallel episodes");
    run->add_option("--out", out_dir, "Results directory");
    run->callback([&] {
        exit_code = cmd_run(corpus_path, backend_specs, variant_spec, concurrency, out_dir);
    });

    auto* report = app.add_subcommand("report", "Re-emit a report from saved results");
    std::string in_dir;
    std::string format = "markdown";
    report->add_option("--in", in_dir, "Results directory")->required();
    report->add_option("--format", format, "csv or markdown");
    report->callback([&] { exit_code = cmd_report(in_dir, format); });

    auto* selftest =
        app.add_subcommand("selftest", "Metric-oracle and golden-prompt checks");
    std::string golden_dir = "tests/golden";
    selftest->add_option("--golden-dir", golden_dir, "Directory with golden prompt files");
    selftest->callback([&] { exit_code = cmd_selftest(golden_dir); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        return app.exit(ex) == 0 ? 0 : 1;
    } catch (const ConfigError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    } catch (const CorpusFormatError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    } catch (const MeshpilotError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return exit_code;
}

}  // namespace meshpilot
