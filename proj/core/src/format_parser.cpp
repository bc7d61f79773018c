#include "grl/format_parser.hpp"

#include <cstddef>

namespace grl {
namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

struct Span {
    std::size_t open = std::string_view::npos;  // position of the opening tag
    std::size_t close = std::string_view::npos; // position of the closing tag
    std::string_view content;
};

std::optional<Span> find_span(std::string_view raw, std::string_view open_tag,
                              std::string_view close_tag) {
    const std::size_t open = raw.find(open_tag);
    if (open == std::string_view::npos) return std::nullopt;
    const std::size_t body = open + open_tag.size();
    const std::size_t close = raw.find(close_tag, body);
    if (close == std::string_view::npos) return std::nullopt;
    return Span{open, close, raw.substr(body, close - body)};
}

std::size_t count_occurrences(std::string_view raw, std::string_view tag) {
    std::size_t n = 0;
    for (std::size_t pos = raw.find(tag); pos != std::string_view::npos;
         pos = raw.find(tag, pos + tag.size())) {
        ++n;
    }
    return n;
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

} // namespace

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

ParsedResponse parse_response(std::string_view raw, const FormatOptions& opts) {
    ParsedResponse out;
    const auto think = find_span(raw, kThinkOpen, kThinkClose);
    const auto answer = find_span(raw, kAnswerOpen, kAnswerClose);
    if (think) out.think = std::string(think->content);
    if (answer) out.answer = std::string(answer->content);

    if (!think || !answer) return out;
    for (std::string_view tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
        if (count_occurrences(raw, tag) != 1) return out;
    }
    if (opts.ordering_required && think->close + kThinkClose.size() > answer->open) return out;
    out.well_formed = true;
    return out;
}

double format_reward(const ParsedResponse& parsed) { return parsed.well_formed ? 1.0 : 0.0; }

std::string answer_or_empty(const ParsedResponse& parsed) {
    if (!parsed.answer) return {};
    return std::string(trim(*parsed.answer));
}

} // namespace grl
