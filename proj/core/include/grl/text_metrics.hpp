#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "grl/types.hpp"

namespace grl {

/// Lowercased tokens. Only tokenize() produces these, so no token is empty.
struct TokenSeq {
    std::vector<std::string> tokens;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
    friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

/// Lowercases ASCII and splits on runs of characters that are neither ASCII
/// alphanumerics nor non-ASCII bytes (so UTF-8 words stay whole).
TokenSeq tokenize(std::string_view text);

/// Unit-cost character edit distance.
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

/// (|s| + |g| - D(s, g)) / (|s| + |g|) on trimmed inputs; 1.0 when both are empty.
double levenshtein_ratio(std::string_view cand, std::string_view gt);

/// Intersection over union of the token sets.
double jaccard(const TokenSeq& cand, const TokenSeq& gt);

/// Unigram F1 with per-type clipped counts.
double rouge1(const TokenSeq& cand, const TokenSeq& gt);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

/// LCS-based F1.
double rouge_l(const TokenSeq& cand, const TokenSeq& gt);

struct MeteorStats {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_mean = 0.0;
    double penalty = 0.0;
    double score = 0.0;
};

/// Exact-match METEOR. Alignment repeatedly takes the longest run of
/// unaligned tokens common to both sides (earliest in cand, then in gt),
/// which reaches the maximum match count and keeps the chunk count low.
MeteorStats meteor_stats(const TokenSeq& cand, const TokenSeq& gt);
double meteor(const TokenSeq& cand, const TokenSeq& gt);

struct LexicalScores {
    double rouge1 = 0.0;
    double rouge_l = 0.0;
    double meteor = 0.0;
    double combined = 0.0;
};

/// (alpha * R1 + beta_lex * RL + gamma * MT) / 3 with its parts.
LexicalScores lexical_scores(std::string_view cand, std::string_view gt,
                             const LexicalWeights& w = {});
double lexical_metric(std::string_view cand, std::string_view gt, const LexicalWeights& w = {});

struct LabelMatchCounts {
    std::size_t tp = 0;
    std::size_t fn_ = 0;
    std::size_t fp = 0;
};

/// Lowercased, trimmed label.
std::string normalize_label(std::string_view label);

/// Predicted labels found in `vocabulary`. The answer is split on commas,
/// semicolons and newlines; an item that is not itself a vocabulary entry is
/// split further on the word "and".
std::set<std::string> parse_labels(std::string_view answer, const std::set<std::string>& vocabulary);

LabelMatchCounts count_labels(std::string_view answer, const std::set<std::string>& gt_labels,
                              const std::set<std::string>& vocabulary);

/// TP / (TP + FN). Throws EmptyGroundTruth for an empty label set.
double recall_reward(std::string_view answer, const std::set<std::string>& gt_labels,
                     const std::set<std::string>& vocabulary);

} // namespace grl
