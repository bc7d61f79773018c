#include "grl/text_metrics.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "grl/format_parser.hpp"

namespace grl {
namespace {

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

double f1(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

} // namespace

TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    std::string cur;
    for (char ch : text) {
        if (is_word_byte(static_cast<unsigned char>(ch))) {
            cur.push_back(ascii_lower(ch));
        } else if (!cur.empty()) {
            out.tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.tokens.push_back(std::move(cur));
    return out;
}

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({up + 1, row[j - 1] + 1, sub});
            diag = up;
        }
    }
    return row[b.size()];
}

double levenshtein_ratio(std::string_view cand, std::string_view gt) {
    cand = trim(cand);
    gt = trim(gt);
    const std::size_t total = cand.size() + gt.size();
    if (total == 0) return 1.0;
    const std::size_t d = levenshtein_distance(cand, gt);
    return static_cast<double>(total - d) / static_cast<double>(total);
}

double jaccard(const TokenSeq& cand, const TokenSeq& gt) {
    const std::set<std::string> a(cand.tokens.begin(), cand.tokens.end());
    const std::set<std::string> b(gt.tokens.begin(), gt.tokens.end());
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double rouge1(const TokenSeq& cand, const TokenSeq& gt) {
    if (cand.empty() || gt.empty()) return 0.0;
    std::map<std::string_view, std::size_t> gt_counts;
    for (const auto& t : gt.tokens) ++gt_counts[t];
    std::size_t overlap = 0;
    for (const auto& t : cand.tokens) {
        auto it = gt_counts.find(t);
        if (it != gt_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    const double p = static_cast<double>(overlap) / static_cast<double>(cand.size());
    const double r = static_cast<double>(overlap) / static_cast<double>(gt.size());
    return f1(p, r);
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a.tokens[i - 1] == b.tokens[j - 1] ? prev[j - 1] + 1
                                                        : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l(const TokenSeq& cand, const TokenSeq& gt) {
    if (cand.empty() || gt.empty()) return 0.0;
    const double lcs = static_cast<double>(lcs_length(cand, gt));
    return f1(lcs / static_cast<double>(cand.size()), lcs / static_cast<double>(gt.size()));
}

MeteorStats meteor_stats(const TokenSeq& cand, const TokenSeq& gt) {
    MeteorStats s;
    const std::size_t n = cand.size();
    const std::size_t m = gt.size();
    if (n == 0 || m == 0) return s;

    std::vector<bool> used_c(n, false), used_g(m, false);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> run((n + 1) * (m + 1));
    for (;;) {
        std::fill(run.begin(), run.end(), 0);
        std::size_t best = 0, best_i = 0, best_j = 0;
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 1; j <= m; ++j) {
                if (used_c[i - 1] || used_g[j - 1] || cand.tokens[i - 1] != gt.tokens[j - 1]) {
                    continue;
                }
                const std::size_t len = run[(i - 1) * (m + 1) + (j - 1)] + 1;
                run[i * (m + 1) + j] = len;
                // Strictly greater keeps the run that ends first in cand,
                // hence starts first for equal lengths.
                if (len > best) {
                    best = len;
                    best_i = i - len;
                    best_j = j - len;
                }
            }
        }
        if (best == 0) break;
        for (std::size_t k = 0; k < best; ++k) {
            used_c[best_i + k] = true;
            used_g[best_j + k] = true;
            pairs.emplace_back(best_i + k, best_j + k);
        }
    }
    if (pairs.empty()) return s;

    std::sort(pairs.begin(), pairs.end());
    s.matches = pairs.size();
    s.chunks = 1;
    for (std::size_t k = 1; k < pairs.size(); ++k) {
        const bool contiguous = pairs[k].first == pairs[k - 1].first + 1 &&
                                pairs[k].second == pairs[k - 1].second + 1;
        if (!contiguous) ++s.chunks;
    }
    const double mm = static_cast<double>(s.matches);
    s.precision = mm / static_cast<double>(n);
    s.recall = mm / static_cast<double>(m);
    s.f_mean = 10.0 * s.precision * s.recall / (s.recall + 9.0 * s.precision);
    const double frag = static_cast<double>(s.chunks) / mm;
    s.penalty = 0.5 * frag * frag * frag;
    s.score = s.f_mean * (1.0 - s.penalty);
    return s;
}

double meteor(const TokenSeq& cand, const TokenSeq& gt) { return meteor_stats(cand, gt).score; }

LexicalScores lexical_scores(std::string_view cand, std::string_view gt, const LexicalWeights& w) {
    const TokenSeq c = tokenize(cand);
    const TokenSeq g = tokenize(gt);
    LexicalScores s;
    s.rouge1 = rouge1(c, g);
    s.rouge_l = rouge_l(c, g);
    s.meteor = meteor(c, g);
    s.combined = (w.alpha * s.rouge1 + w.beta_lex * s.rouge_l + w.gamma * s.meteor) / 3.0;
    return s;
}

double lexical_metric(std::string_view cand, std::string_view gt, const LexicalWeights& w) {
    return lexical_scores(cand, gt, w).combined;
}

std::string normalize_label(std::string_view label) {
    std::string out(trim(label));
    for (char& c : out) c = ascii_lower(c);
    return out;
}

namespace {

std::vector<std::string_view> split_any(std::string_view s, std::string_view seps) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || seps.find(s[i]) != std::string_view::npos) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

// Splits a lowercased item on the standalone word "and".
std::vector<std::string> split_on_and(const std::string& item) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    std::size_t pos = 0;
    while ((pos = item.find("and", pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_byte(static_cast<unsigned char>(item[pos - 1]));
        const bool right_ok =
            pos + 3 == item.size() || !is_word_byte(static_cast<unsigned char>(item[pos + 3]));
        if (left_ok && right_ok) {
            parts.push_back(normalize_label(std::string_view(item).substr(start, pos - start)));
            start = pos + 3;
        }
        pos += 3;
    }
    parts.push_back(normalize_label(std::string_view(item).substr(start)));
    return parts;
}

std::set<std::string> normalized(const std::set<std::string>& labels) {
    std::set<std::string> out;
    for (const auto& l : labels) out.insert(normalize_label(l));
    return out;
}

} // namespace

std::set<std::string> parse_labels(std::string_view answer, const std::set<std::string>& vocabulary) {
    const std::set<std::string> vocab = normalized(vocabulary);
    std::set<std::string> found;
    for (std::string_view raw_item : split_any(answer, ",;\n")) {
        const std::string item = normalize_label(raw_item);
        if (item.empty()) continue;
        if (vocab.count(item)) {
            found.insert(item);
            continue;
        }
        for (const auto& part : split_on_and(item)) {
            if (!part.empty() && vocab.count(part)) found.insert(part);
        }
    }
    return found;
}

LabelMatchCounts count_labels(std::string_view answer, const std::set<std::string>& gt_labels,
                              const std::set<std::string>& vocabulary) {
    const std::set<std::string> gt = normalized(gt_labels);
    if (gt.empty()) throw Error(ErrorCode::EmptyGroundTruth, "recall needs at least one label");
    std::set<std::string> vocab = normalized(vocabulary);
    vocab.insert(gt.begin(), gt.end());
    const std::set<std::string> predicted = parse_labels(answer, vocab);

    LabelMatchCounts c;
    for (const auto& label : gt) {
        if (predicted.count(label)) {
            ++c.tp;
        } else {
            ++c.fn_;
        }
    }
    c.fp = predicted.size() - c.tp;
    return c;
}

double recall_reward(std::string_view answer, const std::set<std::string>& gt_labels,
                     const std::set<std::string>& vocabulary) {
    const LabelMatchCounts c = count_labels(answer, gt_labels, vocabulary);
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn_);
}

} // namespace grl
