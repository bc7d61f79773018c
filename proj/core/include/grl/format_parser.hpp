#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace grl {

struct FormatOptions {
    /// Require the think span to close before the answer span opens.
    bool ordering_required = true;
};

struct ParsedResponse {
    std::optional<std::string> think;
    std::optional<std::string> answer;
    bool well_formed = false;
};

/// Extracts the first <think>...</think> and <answer>...</answer> spans.
/// A span exists only if its opening tag is followed by a closing tag; the
/// response is well formed when both spans exist, each of the four tags
/// occurs exactly once, and (unless relaxed) think closes before answer opens.
/// Tags are literal and case-sensitive.
ParsedResponse parse_response(std::string_view raw, const FormatOptions& opts = {});

/// 1.0 for a well-formed response, otherwise 0.0.
double format_reward(const ParsedResponse& parsed);

/// Trimmed answer content, or "" when there is no answer span.
std::string answer_or_empty(const ParsedResponse& parsed);

/// ASCII whitespace trim.
std::string_view trim(std::string_view s);

} // namespace grl
