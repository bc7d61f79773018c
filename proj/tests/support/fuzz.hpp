#pragma once

// Random inputs for property and fuzz tests.

#include <random>
#include <string>
#include <vector>

#include "grl/geometry.hpp"
#include "grl/types.hpp"

namespace fuzz {

inline const std::vector<std::string>& words() {
    static const std::vector<std::string> w = {
        "river", "forest", "building", "road",  "harbor", "ship",  "airport", "plane",
        "field", "water",  "bridge",   "urban", "damage", "small", "large",   "two",
        "three", "near",   "the",      "a",     "and",    "of",    "is",      "über",
        "Ω",     "x1",     "42",       "",      " ",      ",",     "\t",      "\n"};
    return w;
}

inline const std::vector<std::string>& labels() {
    static const std::vector<std::string> l = {"forest", "river",   "urban fabric", "sea and ocean",
                                               "beaches", "pastures", "industrial",  "vineyards"};
    return l;
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline grl::RotatedBox random_box(std::mt19937_64& rng) {
    return grl::RotatedBox{uniform(rng, 0, 448), uniform(rng, 0, 448), uniform(rng, 1, 200),
                           uniform(rng, 1, 200), uniform(rng, -90, 90)};
}

inline std::string random_words(std::mt19937_64& rng, std::size_t max_words) {
    std::string s;
    const std::size_t n = pick(rng, max_words + 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += words()[pick(rng, words().size())];
    }
    return s;
}

inline std::string random_box_literal(std::mt19937_64& rng) {
    switch (pick(rng, 6)) {
    case 0:
        return "{<12><abc><5><5>|<0>}";
    case 1:
        return "{<" + std::to_string(uniform(rng, -600, 900)) + "><10><-3><4>|<7>}";
    case 2:
        return "{<1><2><3>";
    default:
        return grl::format_box(random_box(rng));
    }
}

/// Free text with tags, box literals, label-like fragments and noise.
inline std::string random_answer(std::mt19937_64& rng) {
    static const std::vector<std::string> tags = {"<think>", "</think>", "<answer>", "</answer>"};
    std::string s;
    const std::size_t parts = pick(rng, 9);
    for (std::size_t i = 0; i < parts; ++i) {
        switch (pick(rng, 6)) {
        case 0:
            s += tags[pick(rng, tags.size())];
            break;
        case 1:
            s += random_box_literal(rng);
            break;
        case 2:
            s += labels()[pick(rng, labels().size())] + ", ";
            break;
        case 3:
            s += static_cast<char>(pick(rng, 256));
            break;
        default:
            s += random_words(rng, 6);
        }
    }
    return s;
}

/// A well-formed response wrapping `answer`, or random noise.
inline std::string random_response(std::mt19937_64& rng) {
    if (pick(rng, 3) == 0) return random_answer(rng);
    return "<think>" + random_words(rng, 5) + "</think><answer>" + random_answer(rng) + "</answer>";
}

inline grl::GroundTruth random_ground_truth(grl::TaskKind task, std::mt19937_64& rng) {
    switch (grl::expected_ground_truth(task)) {
    case grl::GroundTruthKind::LabelSet: {
        grl::LabelSet ls;
        const std::size_t n = 1 + pick(rng, 3);
        while (ls.labels.size() < n) ls.labels.insert(labels()[pick(rng, labels().size())]);
        return ls;
    }
    case grl::GroundTruthKind::Text:
        return grl::TextTruth{random_words(rng, 10)};
    case grl::GroundTruthKind::Boxes: {
        grl::BoxesTruth bt;
        const std::size_t n = 1 + pick(rng, 3);
        for (std::size_t i = 0; i < n; ++i) bt.boxes.push_back(random_box(rng));
        return bt;
    }
    case grl::GroundTruthKind::BoxesWithText: {
        grl::BoxesWithText bw;
        const std::size_t n = 1 + pick(rng, 3);
        for (std::size_t i = 0; i < n; ++i) bw.boxes.push_back(random_box(rng));
        bw.text = random_words(rng, 8);
        return bw;
    }
    }
    return grl::TextTruth{};
}

/// Answer biased towards the ground truth so that high rewards get exercised.
inline std::string related_answer(const grl::GroundTruth& gt, std::mt19937_64& rng) {
    std::string s;
    if (const auto* ls = std::get_if<grl::LabelSet>(&gt)) {
        for (const auto& l : ls->labels) {
            if (pick(rng, 3) != 0) s += l + ", ";
        }
    } else if (const auto* t = std::get_if<grl::TextTruth>(&gt)) {
        s = t->text;
        if (pick(rng, 2)) s += " " + random_words(rng, 3);
    } else if (const auto* b = std::get_if<grl::BoxesTruth>(&gt)) {
        for (auto box : b->boxes) {
            box.angle_deg += uniform(rng, -10, 10);
            box.cx += uniform(rng, -5, 5);
            s += grl::format_box(box) + " ";
        }
    } else if (const auto* bw = std::get_if<grl::BoxesWithText>(&gt)) {
        s = bw->text + " ";
        for (const auto& box : bw->boxes) s += grl::format_box(box);
    }
    return s;
}

} // namespace fuzz
