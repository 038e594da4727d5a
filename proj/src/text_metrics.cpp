#include "meshpilot/text_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <utility>

#include "meshpilot/errors.hpp"

namespace meshpilot {

TokenSeq tokenize(const std::string& text) {
    std::string mapped;
    mapped.reserve(text.size());
    for (char ch : text) {
        const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if ((lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9') || lower == '.') {
            mapped.push_back(lower);
        } else {
            mapped.push_back(' ');
        }
    }

    TokenSeq tokens;
    std::size_t pos = 0;
    while (pos < mapped.size()) {
        while (pos < mapped.size() && mapped[pos] == ' ') ++pos;
        std::size_t end = pos;
        while (end < mapped.size() && mapped[end] != ' ') ++end;
        if (end > pos) {
            std::string token = mapped.substr(pos, end - pos);
            std::size_t first = 0;
            while (first < token.size() && token[first] == '.') ++first;
            std::size_t last = token.size();
            while (last > first && token[last - 1] == '.') --last;
            if (last > first) {
                tokens.push_back(token.substr(first, last - first));
            }
        }
        pos = end;
    }
    return tokens;
}

namespace {

std::map<std::string, int> count_tokens(const TokenSeq& seq) {
    std::map<std::string, int> counts;
    for (const auto& token : seq) ++counts[token];
    return counts;
}

/// Clipped multiset unigram overlap.
int unigram_overlap(const TokenSeq& hyp, const TokenSeq& ref) {
    const auto hyp_counts = count_tokens(hyp);
    const auto ref_counts = count_tokens(ref);
    int overlap = 0;
    for (const auto& [token, count] : hyp_counts) {
        const auto it = ref_counts.find(token);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    return overlap;
}

std::map<std::vector<std::string>, int> ngram_counts(const TokenSeq& seq, int n) {
    std::map<std::vector<std::string>, int> counts;
    if (static_cast<int>(seq.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
        ++counts[std::vector<std::string>(seq.begin() + i, seq.begin() + i + n)];
    }
    return counts;
}

}  // namespace

Rouge1Score rouge1(const TokenSeq& hyp, const TokenSeq& ref) {
    if (hyp.empty() && ref.empty()) return {1.0, 1.0, 1.0};
    if (hyp.empty() || ref.empty()) return {0.0, 0.0, 0.0};

    const int overlap = unigram_overlap(hyp, ref);
    Rouge1Score score;
    score.precision = static_cast<double>(overlap) / static_cast<double>(hyp.size());
    score.recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
    const double sum = score.precision + score.recall;
    score.f1 = sum > 0.0 ? 2.0 * score.precision * score.recall / sum : 0.0;
    return score;
}

double bleu(const TokenSeq& hyp, const TokenSeq& ref) {
    if (hyp.empty() && ref.empty()) return 1.0;
    if (hyp.empty() || ref.empty()) return 0.0;

    const int max_order =
        std::min<int>(4, static_cast<int>(std::min(hyp.size(), ref.size())));

    double log_sum = 0.0;
    for (int n = 1; n <= max_order; ++n) {
        const auto hyp_grams = ngram_counts(hyp, n);
        const auto ref_grams = ngram_counts(ref, n);
        int clipped = 0;
        int total = 0;
        for (const auto& [gram, count] : hyp_grams) {
            total += count;
            const auto it = ref_grams.find(gram);
            if (it != ref_grams.end()) clipped += std::min(count, it->second);
        }
        if (clipped == 0) return 0.0;  // unsmoothed
        log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
    }

    const double hyp_len = static_cast<double>(hyp.size());
    const double ref_len = static_cast<double>(ref.size());
    const double brevity = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
    return brevity * std::exp(log_sum / max_order);
}

namespace {

/// Exhaustive max-matches / min-chunks / leftmost alignment search. DFS over
/// hypothesis positions in lexicographic pairing order with two prunes that
/// never cut an improving branch: a multiset upper bound on reachable
/// matches, and the fact that chunks is nondecreasing as pairs are appended.
class AlignmentSearch {
public:
    AlignmentSearch(const TokenSeq& hyp, const TokenSeq& ref) : hyp_(hyp), ref_(ref) {
        ref_used_.assign(ref_.size(), false);
        for (const auto& token : ref_) ++ref_remaining_[token];
        hyp_suffix_.resize(hyp_.size() + 1);
        for (std::size_t i = hyp_.size(); i-- > 0;) {
            hyp_suffix_[i] = hyp_suffix_[i + 1];
            ++hyp_suffix_[i][hyp_[i]];
        }
    }

    Alignment run() {
        seed_incumbent();
        dfs(0, 0, 0, -2);
        return {best_matches_, best_matches_ == 0 ? 0 : best_chunks_};
    }

private:
    /// Greedy feasible alignment with the maximum match count (per-token-type
    /// budgets make the count optimal; chunk count is just an upper bound).
    /// Seeding it as the incumbent lets the DFS prune on chunks from the
    /// root, which keeps repeated-token worst cases tractable.
    void seed_incumbent() {
        auto budget = ref_remaining_;
        std::vector<bool> used(ref_.size(), false);
        int matches = 0;
        int chunks = 0;
        int last = -2;
        bool contiguous = false;
        for (const std::string& token : hyp_) {
            const auto it = budget.find(token);
            if (it == budget.end() || it->second == 0) {
                contiguous = false;
                continue;
            }
            std::size_t pick = ref_.size();
            const std::size_t next = static_cast<std::size_t>(last + 1);
            if (contiguous && last >= 0 && next < ref_.size() && !used[next] &&
                ref_[next] == token) {
                pick = next;
            } else {
                for (std::size_t j = 0; j < ref_.size(); ++j) {
                    if (!used[j] && ref_[j] == token) {
                        pick = j;
                        break;
                    }
                }
            }
            used[pick] = true;
            --it->second;
            ++matches;
            chunks += (contiguous && static_cast<int>(pick) == last + 1) ? 0 : 1;
            last = static_cast<int>(pick);
            contiguous = true;
        }
        best_matches_ = matches;
        best_chunks_ = chunks;
    }
    int bound_remaining(std::size_t hyp_pos) const {
        int bound = 0;
        for (const auto& [token, count] : hyp_suffix_[hyp_pos]) {
            const auto it = ref_remaining_.find(token);
            if (it != ref_remaining_.end()) bound += std::min(count, it->second);
        }
        return bound;
    }

    void dfs(std::size_t hyp_pos, int matches, int chunks, int last_ref) {
        const int reachable = matches + bound_remaining(hyp_pos);
        if (reachable < best_matches_) return;
        if (reachable == best_matches_ && best_matches_ > 0 && chunks > best_chunks_) return;

        if (hyp_pos == hyp_.size()) {
            // Strict improvement only: the DFS order is lexicographic, so the
            // first solution reaching a (matches, chunks) pair is leftmost.
            if (matches > best_matches_ ||
                (matches == best_matches_ && chunks < best_chunks_)) {
                best_matches_ = matches;
                best_chunks_ = chunks;
            }
            return;
        }

        for (std::size_t ref_pos = 0; ref_pos < ref_.size(); ++ref_pos) {
            if (ref_used_[ref_pos] || ref_[ref_pos] != hyp_[hyp_pos]) continue;
            const bool extends =
                last_ref >= 0 && static_cast<std::size_t>(last_ref) + 1 == ref_pos &&
                contiguous_;
            ref_used_[ref_pos] = true;
            --ref_remaining_[ref_[ref_pos]];
            const bool prev_contiguous = contiguous_;
            contiguous_ = true;
            dfs(hyp_pos + 1, matches + 1, chunks + (extends ? 0 : 1),
                static_cast<int>(ref_pos));
            contiguous_ = prev_contiguous;
            ++ref_remaining_[ref_[ref_pos]];
            ref_used_[ref_pos] = false;
        }

        // Leave this hypothesis token unmatched.
        const bool prev_contiguous = contiguous_;
        contiguous_ = false;
        dfs(hyp_pos + 1, matches, chunks, last_ref);
        contiguous_ = prev_contiguous;
    }

    const TokenSeq& hyp_;
    const TokenSeq& ref_;
    std::vector<bool> ref_used_;
    std::map<std::string, int> ref_remaining_;
    std::vector<std::map<std::string, int>> hyp_suffix_;
    // Whether the previous hypothesis position was matched (a chunk can only
    // continue across adjacent hypothesis positions).
    bool contiguous_ = false;
    int best_matches_ = -1;
    int best_chunks_ = 0;
};

}  // namespace

Alignment align_unigrams(const TokenSeq& hyp, const TokenSeq& ref) {
    if (hyp.size() + ref.size() > 64) {
        throw AlignmentSizeError("align_unigrams: combined length " +
                                 std::to_string(hyp.size() + ref.size()) +
                                 " exceeds the 64-token exhaustive-search bound");
    }
    return AlignmentSearch(hyp, ref).run();
}

double meteor(const TokenSeq& hyp, const TokenSeq& ref) {
    const Alignment alignment = align_unigrams(hyp, ref);
    if (alignment.matches == 0) return 0.0;

    const double m = alignment.matches;
    const double precision = m / static_cast<double>(hyp.size());
    const double recall = m / static_cast<double>(ref.size());
    const double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    const double frag = static_cast<double>(alignment.chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    return fmean * (1.0 - penalty);
}

MetricScore score_pair(const std::string& hypothesis, const std::string& reference) {
    const TokenSeq hyp = tokenize(hypothesis);
    const TokenSeq ref = tokenize(reference);
    const Rouge1Score rouge = rouge1(hyp, ref);
    MetricScore score;
    score.rouge1_p = rouge.precision;
    score.rouge1_r = rouge.recall;
    score.rouge1_f = rouge.f1;
    score.meteor = meteor(hyp, ref);
    score.bleu = bleu(hyp, ref);
    return score;
}

}  // namespace meshpilot
