#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "grl/embedding.hpp"
#include "grl/format_parser.hpp"
#include "grl/geometry.hpp"
#include "grl/types.hpp"

namespace grl {

/// Which reward drives the Grounding task. Lmgr is the standard path; the
/// single-component variants exist for reward-hacking comparisons.
enum class GroundingReward { Lmgr, LexicalOnly, DetectionOnly };

struct RewardConfig {
    LexicalWeights lexical_weights;
    DetectionMode detection_mode = DetectionMode::RBB;
    HbbConversion hbb_conversion = HbbConversion::ZeroAngle;
    GroundingReward grounding_reward = GroundingReward::Lmgr;
    std::shared_ptr<EmbeddingProvider> embedding_provider =
        std::make_shared<HashEmbeddingProvider>();
    std::set<std::string> label_vocabulary;
    bool format_ordering_required = true;
};

/// Throws InvalidArgument for negative lexical weights, weights summing past
/// 3 (which would let R_LM exceed 1) or a missing embedding provider.
void validate_reward_config(const RewardConfig& cfg);

struct TaskAccuracy {
    double value = 0.0;
    std::map<std::string, double> components;
};

/// Table of task -> accuracy reward:
///   Classification          recall
///   ImageCaptioning         Levenshtein ratio
///   VQA                     Jaccard
///   RegionCaptioning        SBERT
///   ReferredObjectDetection detection (RBB or HBB per cfg)
///   Grounding               LMGR
///   ChangeDetectionCaption  HSLR
TaskAccuracy task_accuracy_reward(TaskKind task, const std::string& answer, const GroundTruth& gt,
                                  const RewardConfig& cfg);

/// (R_LM + R_Detection) / 2. Box literals are removed from the answer before
/// lexical scoring. Components: rouge1, rougeL, meteor, lexical, detection,
/// det_precision.
TaskAccuracy lmgr(const std::string& answer, const BoxesWithText& gt, const RewardConfig& cfg);

/// (R_SBERT + R_LM) / 2. Components: sbert_cos, rouge1, rougeL, meteor, lexical.
TaskAccuracy hslr(const std::string& answer, const std::string& gt_text, const RewardConfig& cfg);

struct ParsedSummary {
    bool has_think = false;
    bool has_answer = false;
    bool well_formed = false;
};

struct ScoreRecord {
    std::string prompt_id;
    std::size_t candidate_index = 0;
    RewardBreakdown breakdown;
    ParsedSummary parsed;
    std::string provider_name;
};

/// parse -> format reward -> answer extraction -> task accuracy -> breakdown.
ScoreRecord score_candidate(const Prompt& prompt, const Candidate& cand, const RewardConfig& cfg,
                            std::size_t candidate_index = 0);

/// Scores every candidate of a validated group, in order. With workers > 1
/// candidates are scored concurrently; the result does not depend on it.
std::vector<ScoreRecord> score_group(const CandidateGroup& group, const RewardConfig& cfg,
                                     std::size_t workers = 1);

} // namespace grl
