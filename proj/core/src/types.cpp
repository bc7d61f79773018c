#include "grl/types.hpp"

#include <cmath>

namespace grl {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::TaskGroundTruthMismatch: return "TaskGroundTruthMismatch";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::NonFiniteReward: return "NonFiniteReward";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::TokenOutOfVocabulary: return "TokenOutOfVocabulary";
    case ErrorCode::EmbeddingServiceUnavailable: return "EmbeddingServiceUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

std::string_view task_name(TaskKind task) {
    switch (task) {
    case TaskKind::Classification: return "classification";
    case TaskKind::ImageCaptioning: return "image_captioning";
    case TaskKind::VQA: return "vqa";
    case TaskKind::RegionCaptioning: return "region_captioning";
    case TaskKind::ReferredObjectDetection: return "referred_object_detection";
    case TaskKind::Grounding: return "grounding";
    case TaskKind::ChangeDetectionCaption: return "change_detection_caption";
    }
    return "unknown";
}

TaskKind parse_task(std::string_view name) {
    for (TaskKind t : kAllTaskKinds) {
        if (task_name(t) == name) return t;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown task '" + std::string(name) + "'");
}

std::string_view ground_truth_kind_name(GroundTruthKind kind) {
    switch (kind) {
    case GroundTruthKind::LabelSet: return "label_set";
    case GroundTruthKind::Text: return "text";
    case GroundTruthKind::Boxes: return "boxes";
    case GroundTruthKind::BoxesWithText: return "boxes_with_text";
    }
    return "unknown";
}

GroundTruthKind ground_truth_kind(const GroundTruth& gt) {
    return static_cast<GroundTruthKind>(gt.index());
}

GroundTruthKind expected_ground_truth(TaskKind task) {
    switch (task) {
    case TaskKind::Classification: return GroundTruthKind::LabelSet;
    case TaskKind::ImageCaptioning:
    case TaskKind::VQA:
    case TaskKind::RegionCaptioning:
    case TaskKind::ChangeDetectionCaption: return GroundTruthKind::Text;
    case TaskKind::ReferredObjectDetection: return GroundTruthKind::Boxes;
    case TaskKind::Grounding: return GroundTruthKind::BoxesWithText;
    }
    return GroundTruthKind::Text;
}

RewardBreakdown RewardBreakdown::make(double format, double task_acc,
                                      std::map<std::string, double> components) {
    if (!std::isfinite(format) || !std::isfinite(task_acc)) {
        throw Error(ErrorCode::NonFiniteReward, "reward component is not finite");
    }
    if (format != 0.0 && format != 1.0) {
        throw Error(ErrorCode::InvalidArgument, "format reward must be 0 or 1");
    }
    if (task_acc < 0.0 || task_acc > 1.0) {
        throw Error(ErrorCode::InvalidArgument,
                    "task accuracy reward out of [0,1]: " + std::to_string(task_acc));
    }
    for (const auto& [name, value] : components) {
        if (!std::isfinite(value)) {
            throw Error(ErrorCode::NonFiniteReward, "component '" + name + "' is not finite");
        }
        if (value < 0.0 || value > 1.0) {
            throw Error(ErrorCode::InvalidArgument, "component '" + name + "' out of [0,1]");
        }
    }
    RewardBreakdown b;
    b.format_ = format;
    b.task_acc_ = task_acc;
    b.total_ = format + task_acc;
    b.components_ = std::move(components);
    return b;
}

void validate_prompt(const Prompt& prompt) {
    if (prompt.id.empty()) {
        throw Error(ErrorCode::InvalidArgument, "prompt id must be non-empty");
    }
    const GroundTruthKind want = expected_ground_truth(prompt.task);
    const GroundTruthKind got = ground_truth_kind(prompt.ground_truth);
    if (want != got) {
        throw Error(ErrorCode::TaskGroundTruthMismatch,
                    std::string(task_name(prompt.task)) + " expects " +
                        std::string(ground_truth_kind_name(want)) + " ground truth, got " +
                        std::string(ground_truth_kind_name(got)));
    }
    if (const auto* ls = std::get_if<LabelSet>(&prompt.ground_truth); ls && ls->labels.empty()) {
        throw Error(ErrorCode::EmptyGroundTruth, "classification label set is empty");
    }
    if (const auto* b = std::get_if<BoxesTruth>(&prompt.ground_truth); b && b->boxes.empty()) {
        throw Error(ErrorCode::EmptyGroundTruth, "detection ground truth has no boxes");
    }
    if (const auto* b = std::get_if<BoxesWithText>(&prompt.ground_truth); b && b->boxes.empty()) {
        throw Error(ErrorCode::EmptyGroundTruth, "grounding ground truth has no boxes");
    }
}

const CandidateGroup& validate_group(const CandidateGroup& group) {
    if (group.candidates.size() < 2) {
        throw Error(ErrorCode::GroupTooSmall,
                    "group '" + group.prompt.id + "' has " +
                        std::to_string(group.candidates.size()) + " candidates, need at least 2");
    }
    validate_prompt(group.prompt);
    return group;
}

} // namespace grl
