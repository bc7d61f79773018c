#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grl/reward_engine.hpp"
#include "grl/toy_lab.hpp"
#include "grl/toy_policy.hpp"
#include "grl/types.hpp"

namespace grl {

// Line-delimited JSON records. Ground truth is an object with a "kind"
// field (label_set | text | boxes | boxes_with_text); boxes are arrays
// [cx, cy, w, h, angle_deg].

/// {prompt_id, task, query, ground_truth, candidates: [string...]}
/// Optional: image_ref. Throws InvalidArgument naming the offending field.
CandidateGroup parse_score_request(std::string_view line);
std::string encode_score_request(const CandidateGroup& group);

/// {prompt_id, candidate_index, format, task_acc, total, components, provider,
///  well_formed}
std::string encode_score_record(const ScoreRecord& rec);

/// Groups reward records by prompt_id (order of first appearance), computes
/// advantages from each record's "total" (or "reward") field, and returns
/// every input record, in input order, extended with mean, std, advantage
/// and degenerate. Malformed lines throw InvalidArgument ("line N: ...");
/// groups with K < 2 throw GroupTooSmall.
std::vector<std::string> annotate_advantages(std::span<const std::string> lines, double std_floor);

/// One record per iteration ({"type":"iteration","stage",...}) followed by a
/// {"type":"summary"} record with the initial and final evaluations.
std::vector<std::string> encode_train_report(const TrainReport& report);
/// Inverse of encode_train_report for reports holding a single stage.
std::vector<TrainReport> decode_train_reports(std::span<const std::string> lines);

std::string encode_policy(const ToyPolicy& policy);
ToyPolicy decode_policy(std::string_view text);

} // namespace grl
