#pragma once

#include <string>
#include <vector>

namespace meshpilot {

using TokenSeq = std::vector<std::string>;

/// Lowercases, maps every character outside [a-z0-9.] to a space, splits on
/// whitespace, strips '.' from token edges and drops empties. "0.1" survives
/// intact; "Mb/s" becomes "mb", "s"; "[2, 3]" becomes "2", "3".
TokenSeq tokenize(const std::string& text);

struct Rouge1Score {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Unigram overlap with clipped multiset counts. Both sequences empty scores
/// (1,1,1); exactly one empty scores (0,0,0).
Rouge1Score rouge1(const TokenSeq& hyp, const TokenSeq& ref);

/// Sentence-level BLEU against a single reference, unsmoothed. The n-gram
/// order is capped at min(4, |hyp|, |ref|) so short action strings are not
/// zeroed out by missing high-order grams; any zero precision zeroes the
/// score. Brevity penalty exp(1 - |ref|/|hyp|) applies when hyp is shorter.
double bleu(const TokenSeq& hyp, const TokenSeq& ref);

/// Unigram alignment summary for the METEOR fragmentation penalty. chunks
/// counts maximal runs of matches contiguous and in order on both sides.
struct Alignment {
    int matches = 0;
    int chunks = 0;
};

/// Among all one-to-one exact-match alignments with the maximum match count,
/// returns one minimizing chunks (exhaustive branch-and-bound; ties broken by
/// leftmost pairing). Throws AlignmentSizeError past 64 combined tokens.
Alignment align_unigrams(const TokenSeq& hyp, const TokenSeq& ref);

/// Original exact-match METEOR: Fmean = 10PR/(R+9P) discounted by the
/// fragmentation penalty 0.5*(chunks/matches)^3. No stemming or synonyms.
double meteor(const TokenSeq& hyp, const TokenSeq& ref);

/// Per-response metric bundle.
struct MetricScore {
    double rouge1_p = 0.0;
    double rouge1_r = 0.0;
    double rouge1_f = 0.0;
    double meteor = 0.0;
    double bleu = 0.0;
};

/// All three metrics over the shared tokenizer.
MetricScore score_pair(const std::string& hypothesis, const std::string& reference);

}  // namespace meshpilot
