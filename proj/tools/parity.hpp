#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace grl::cli {

/// Deterministic fixture corpus: one JSON object per line. Score cases hold
/// a request plus the native score records (offline hash embeddings);
/// advantage cases hold a reward list plus the native group statistics.
std::vector<std::string> make_parity_corpus(std::size_t groups_per_task = 32,
                                            std::size_t advantage_cases = 32);

/// Recomputes one corpus line natively. Returns a description of the first
/// mismatch, or nullopt when every value agrees bit for bit.
std::optional<std::string> check_parity_case(std::string_view line);

} // namespace grl::cli
