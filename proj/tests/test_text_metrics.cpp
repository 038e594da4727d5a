#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "meshpilot/action_grammar.hpp"
#include "meshpilot/errors.hpp"
#include "meshpilot/rng.hpp"
#include "meshpilot/text_metrics.hpp"
#include "metric_reference.hpp"

using namespace meshpilot;

namespace {

bool near(double a, double b, double tol = 1e-9) { return std::fabs(a - b) <= tol; }

TokenSeq random_tokens(SplitMix64& rng, int max_len) {
    static const std::vector<std::string> alphabet = {"node", "channel", "update",
                                                      "all",  "1",       "2"};
    TokenSeq seq;
    const int len = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_len) + 1));
    for (int i = 0; i < len; ++i) {
        seq.push_back(alphabet[rng.next_below(alphabet.size())]);
    }
    return seq;
}

}  // namespace

TEST_CASE("tokenize lowercases, splits on non-alphanumerics and keeps inner dots") {
    CHECK(tokenize("Update Neighbors of node 1") ==
          TokenSeq{"update", "neighbors", "of", "node", "1"});
    CHECK(tokenize("Set Network Throughput to 0.1 Mb/s for all nodes") ==
          TokenSeq{"set", "network", "throughput", "to", "0.1", "mb", "s", "for", "all",
                   "nodes"});
    CHECK(tokenize("[2, 3].") == TokenSeq{"2", "3"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("...").empty());
    CHECK(tokenize("a..b") == TokenSeq{"a..b"});  // only edge dots are stripped
}

TEST_CASE("rouge1 identity, overlap and disjoint cases") {
    const TokenSeq same = {"update", "neighbors", "of", "node", "1"};
    const auto identity = rouge1(same, same);
    CHECK(identity.precision == 1.0);
    CHECK(identity.recall == 1.0);
    CHECK(identity.f1 == 1.0);

    const auto derived = rouge1(tokenize("Update Neighbors of node 1"),
                                tokenize("Update Neighbors of node 2"));
    CHECK(near(derived.precision, 0.8));
    CHECK(near(derived.recall, 0.8));
    CHECK(near(derived.f1, 0.8));

    const auto disjoint = rouge1({"no", "action"}, {"switch", "channel"});
    CHECK(disjoint.precision == 0.0);
    CHECK(disjoint.recall == 0.0);
    CHECK(disjoint.f1 == 0.0);
}

TEST_CASE("rouge1 empty-sequence rules") {
    const auto both = rouge1({}, {});
    CHECK(both.precision == 1.0);
    CHECK(both.recall == 1.0);
    CHECK(both.f1 == 1.0);

    const auto hyp_empty = rouge1({}, {"a"});
    CHECK(hyp_empty.f1 == 0.0);
    const auto ref_empty = rouge1({"a"}, {});
    CHECK(ref_empty.f1 == 0.0);
}

TEST_CASE("rouge1 clips repeated tokens") {
    const auto score = rouge1({"a", "a", "a"}, {"a"});
    CHECK(near(score.precision, 1.0 / 3.0));
    CHECK(near(score.recall, 1.0));
}

TEST_CASE("bleu identity, derived pair and zero cases") {
    const TokenSeq same = {"update", "neighbors", "of", "node", "1"};
    CHECK(bleu(same, same) == 1.0);

    const double derived = bleu(tokenize("Update Neighbors of node 1"),
                                tokenize("Update Neighbors of node 2"));
    CHECK(near(derived, std::pow(0.2, 0.25)));

    CHECK(bleu({"no", "action"}, {"no", "action"}) == 1.0);  // order capped at 2
    CHECK(bleu({"update"}, {"switch"}) == 0.0);
    CHECK(bleu({}, {}) == 1.0);
    CHECK(bleu({}, {"a"}) == 0.0);
    CHECK(bleu({"a"}, {}) == 0.0);
}

TEST_CASE("bleu brevity penalty for short hypotheses") {
    // hyp is a 3-token prefix of a 5-token ref: p1=p2=p3=1, BP = exp(1-5/3).
    const TokenSeq ref = {"update", "neighbors", "of", "node", "1"};
    const TokenSeq hyp = {"update", "neighbors", "of"};
    CHECK(near(bleu(hyp, ref), std::exp(1.0 - 5.0 / 3.0)));
    // Longer hypothesis gets no bonus.
    const TokenSeq padded = {"update", "neighbors", "of", "node", "1", "now"};
    CHECK(bleu(padded, ref) < 1.0);
}

TEST_CASE("align_unigrams finds max matches then min chunks") {
    const TokenSeq same = {"update", "neighbors", "of", "node", "1"};
    auto identity = align_unigrams(same, same);
    CHECK(identity.matches == 5);
    CHECK(identity.chunks == 1);

    auto derived = align_unigrams(tokenize("Update Neighbors of node 1"),
                                  tokenize("Update Neighbors of node 2"));
    CHECK(derived.matches == 4);
    CHECK(derived.chunks == 1);

    auto swapped = align_unigrams({"a", "b"}, {"b", "a"});
    CHECK(swapped.matches == 2);
    CHECK(swapped.chunks == 2);

    auto empty = align_unigrams({}, {});
    CHECK(empty.matches == 0);
    CHECK(empty.chunks == 0);

    // Repeated tokens: choosing the run-preserving pairing matters.
    auto repeated = align_unigrams({"a", "b", "a"}, {"a", "a", "b"});
    CHECK(repeated.matches == 3);
    CHECK(repeated.chunks == 2);
}

TEST_CASE("align_unigrams enforces the 64-token bound") {
    TokenSeq big(40, "x");
    CHECK_THROWS_AS(align_unigrams(big, big), AlignmentSizeError);
}

TEST_CASE("meteor identity, derived pair and disjoint") {
    const TokenSeq same = {"update", "neighbors", "of", "node", "1"};
    CHECK(near(meteor(same, same), 0.996, 1e-12));

    const double derived = meteor(tokenize("Update Neighbors of node 1"),
                                  tokenize("Update Neighbors of node 2"));
    CHECK(near(derived, 0.79375, 1e-12));

    CHECK(meteor({"no", "action"}, {"switch", "channel"}) == 0.0);
    CHECK(meteor({}, {}) == 0.0);  // zero matches scores zero
}

TEST_CASE("meteor identity law holds exactly on every canonical action string") {
    for (const Action& action : enumerate_valid_actions(3)) {
        const TokenSeq tokens = tokenize(canonical_render(action));
        const double frag = 1.0 / static_cast<double>(tokens.size());
        const double expected = 1.0 - 0.5 * frag * frag * frag;
        CHECK(meteor(tokens, tokens) == expected);
    }
}

TEST_CASE("metric oracle equivalence over all 529 canonical action pairs") {
    const auto actions = enumerate_valid_actions(3);
    REQUIRE(actions.size() == 23);
    int pairs = 0;
    for (const Action& a : actions) {
        for (const Action& b : actions) {
            const std::string hyp_text = canonical_render(a);
            const std::string ref_text = canonical_render(b);
            const TokenSeq hyp = tokenize(hyp_text);
            const TokenSeq ref = tokenize(ref_text);
            CHECK(hyp == reference::ref_tokenize(hyp_text));

            const auto rouge = rouge1(hyp, ref);
            const auto ref_rouge = reference::ref_rouge1(hyp, ref);
            CHECK(near(rouge.precision, ref_rouge.precision));
            CHECK(near(rouge.recall, ref_rouge.recall));
            CHECK(near(rouge.f1, ref_rouge.f1));
            CHECK(near(bleu(hyp, ref), reference::ref_bleu(hyp, ref)));
            CHECK(near(meteor(hyp, ref), reference::ref_meteor(hyp, ref)));

            const auto alignment = align_unigrams(hyp, ref);
            const auto ref_alignment = reference::ref_align(hyp, ref);
            CHECK(alignment.matches == ref_alignment.matches);
            CHECK(alignment.chunks == ref_alignment.chunks);
            ++pairs;
        }
    }
    CHECK(pairs == 529);
}

TEST_CASE("property: random pairs stay in [0,1] and agree with the reference") {
    SplitMix64 rng(0x5eed1);
    for (int i = 0; i < 300; ++i) {
        const TokenSeq hyp = random_tokens(rng, 6);
        const TokenSeq ref = random_tokens(rng, 6);

        const auto rouge = rouge1(hyp, ref);
        const double b = bleu(hyp, ref);
        const double m = meteor(hyp, ref);
        for (double value : {rouge.precision, rouge.recall, rouge.f1, b, m}) {
            CHECK(value >= 0.0);
            CHECK(value <= 1.0);
        }

        // Precision/recall swap under argument exchange.
        const auto swapped = rouge1(ref, hyp);
        CHECK(rouge.precision == swapped.recall);
        CHECK(rouge.recall == swapped.precision);

        const auto ref_rouge = reference::ref_rouge1(hyp, ref);
        CHECK(near(rouge.f1, ref_rouge.f1));
        CHECK(near(b, reference::ref_bleu(hyp, ref)));
        CHECK(near(m, reference::ref_meteor(hyp, ref)));

        const auto alignment = align_unigrams(hyp, ref);
        if (alignment.matches > 0) {
            CHECK(alignment.chunks >= 1);
            CHECK(alignment.chunks <= alignment.matches);
        } else {
            CHECK(alignment.chunks == 0);
        }
    }
}

TEST_CASE("property: alignment matches the unpruned reference on repeated tokens") {
    // Two-letter soup maximizes duplicate-token ambiguity, the hardest case
    // for the pruned search.
    SplitMix64 rng(0x50f7);
    for (int i = 0; i < 2000; ++i) {
        TokenSeq hyp, ref;
        const int hyp_len = static_cast<int>(rng.next_below(8));
        const int ref_len = static_cast<int>(rng.next_below(8));
        for (int k = 0; k < hyp_len; ++k) hyp.push_back(rng.next_below(2) ? "a" : "b");
        for (int k = 0; k < ref_len; ++k) ref.push_back(rng.next_below(2) ? "a" : "b");
        const Alignment got = align_unigrams(hyp, ref);
        const auto want = reference::ref_align(hyp, ref);
        CHECK(got.matches == want.matches);
        CHECK(got.chunks == want.chunks);
    }
}

TEST_CASE("property: dropping a matching hyp token never raises rouge recall") {
    SplitMix64 rng(0x5eed2);
    for (int i = 0; i < 200; ++i) {
        TokenSeq hyp = random_tokens(rng, 6);
        const TokenSeq ref = random_tokens(rng, 6);
        if (hyp.empty()) continue;
        const std::size_t drop = rng.next_below(hyp.size());
        const bool matching =
            std::find(ref.begin(), ref.end(), hyp[drop]) != ref.end();
        if (!matching) continue;
        const double before = rouge1(hyp, ref).recall;
        hyp.erase(hyp.begin() + static_cast<std::ptrdiff_t>(drop));
        CHECK(rouge1(hyp, ref).recall <= before + 1e-12);
    }
}

TEST_CASE("score_pair scores hypothesis text against reference text") {
    const MetricScore score =
        score_pair("Update Neighbors of node 1", "Update Neighbors of node 2");
    CHECK(near(score.rouge1_f, 0.8));
    CHECK(near(score.meteor, 0.79375, 1e-12));
    CHECK(near(score.bleu, std::pow(0.2, 0.25)));
}
