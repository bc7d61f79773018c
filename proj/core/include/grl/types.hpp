#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "grl/error.hpp"

namespace grl {

/// Pixel grid every box coordinate is normalized to.
inline constexpr double kGridSize = 448.0;

enum class TaskKind {
    Classification,
    ImageCaptioning,
    VQA,
    RegionCaptioning,
    ReferredObjectDetection,
    Grounding,
    ChangeDetectionCaption,
};

inline constexpr TaskKind kAllTaskKinds[] = {
    TaskKind::Classification,   TaskKind::ImageCaptioning,         TaskKind::VQA,
    TaskKind::RegionCaptioning, TaskKind::ReferredObjectDetection, TaskKind::Grounding,
    TaskKind::ChangeDetectionCaption,
};

std::string_view task_name(TaskKind task);
/// Accepts the names produced by task_name(); throws InvalidArgument otherwise.
TaskKind parse_task(std::string_view name);

/// Oriented box on the 448x448 grid. Angle is in degrees, counter-clockwise
/// positive, normalized to [-90, 90).
struct RotatedBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 1.0;
    double h = 1.0;
    double angle_deg = 0.0;

    double area() const { return w * h; }
    friend bool operator==(const RotatedBox&, const RotatedBox&) = default;
};

struct LabelSet {
    std::set<std::string> labels;
    friend bool operator==(const LabelSet&, const LabelSet&) = default;
};
struct TextTruth {
    std::string text;
    friend bool operator==(const TextTruth&, const TextTruth&) = default;
};
struct BoxesTruth {
    std::vector<RotatedBox> boxes;
    friend bool operator==(const BoxesTruth&, const BoxesTruth&) = default;
};
struct BoxesWithText {
    std::vector<RotatedBox> boxes;
    std::string text;
    friend bool operator==(const BoxesWithText&, const BoxesWithText&) = default;
};

using GroundTruth = std::variant<LabelSet, TextTruth, BoxesTruth, BoxesWithText>;

enum class GroundTruthKind { LabelSet, Text, Boxes, BoxesWithText };

std::string_view ground_truth_kind_name(GroundTruthKind kind);
GroundTruthKind ground_truth_kind(const GroundTruth& gt);
/// The single legal ground-truth variant for each task.
GroundTruthKind expected_ground_truth(TaskKind task);

struct Prompt {
    std::string id;
    std::optional<std::string> image_ref;
    std::string query_text;
    TaskKind task = TaskKind::VQA;
    GroundTruth ground_truth;
};

struct Candidate {
    std::string raw_response;
    std::optional<double> logprob_old;
};

struct CandidateGroup {
    Prompt prompt;
    std::vector<Candidate> candidates;
};

struct LexicalWeights {
    double alpha = 1.0;
    double beta_lex = 1.0;
    double gamma = 1.0;
};

/// Per-candidate reward split. Construct through make(); total is always
/// format + task_acc.
class RewardBreakdown {
public:
    RewardBreakdown() = default;

    static RewardBreakdown make(double format, double task_acc,
                                std::map<std::string, double> components = {});

    double format() const { return format_; }
    double task_acc() const { return task_acc_; }
    double total() const { return total_; }
    const std::map<std::string, double>& components() const { return components_; }

    friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;

private:
    double format_ = 0.0;
    double task_acc_ = 0.0;
    double total_ = 0.0;
    std::map<std::string, double> components_;
};

/// Checks the prompt's task/ground-truth pairing and that it is non-empty.
void validate_prompt(const Prompt& prompt);

/// Returns the group unchanged when K >= 2 and the prompt is consistent.
const CandidateGroup& validate_group(const CandidateGroup& group);

} // namespace grl
