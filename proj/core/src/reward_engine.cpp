#include "grl/reward_engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "grl/text_metrics.hpp"

namespace grl {
namespace {

void add_lexical(std::map<std::string, double>& components, const LexicalScores& lex) {
    components["rouge1"] = lex.rouge1;
    components["rougeL"] = lex.rouge_l;
    components["meteor"] = lex.meteor;
    components["lexical"] = lex.combined;
}

template <class Truth>
const Truth& expect_truth(TaskKind task, const GroundTruth& gt) {
    const Truth* t = std::get_if<Truth>(&gt);
    if (t == nullptr) {
        throw Error(ErrorCode::TaskGroundTruthMismatch,
                    std::string(task_name(task)) + " expects " +
                        std::string(ground_truth_kind_name(expected_ground_truth(task))) +
                        " ground truth");
    }
    return *t;
}

} // namespace

void validate_reward_config(const RewardConfig& cfg) {
    const auto& w = cfg.lexical_weights;
    if (w.alpha < 0.0 || w.beta_lex < 0.0 || w.gamma < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "lexical weights must be non-negative");
    }
    if (w.alpha + w.beta_lex + w.gamma > 3.0) {
        throw Error(ErrorCode::InvalidArgument, "lexical weights must sum to at most 3");
    }
    if (!cfg.embedding_provider) {
        throw Error(ErrorCode::InvalidArgument, "reward config has no embedding provider");
    }
}

TaskAccuracy lmgr(const std::string& answer, const BoxesWithText& gt, const RewardConfig& cfg) {
    if (gt.boxes.empty()) throw Error(ErrorCode::EmptyGroundTruth, "grounding needs boxes");
    TaskAccuracy r;
    const auto pred = parse_boxes(answer);
    const DetectionMatch det = detection_match(pred, gt.boxes, cfg.detection_mode, cfg.hbb_conversion);
    const LexicalScores lex =
        lexical_scores(strip_box_literals(answer), strip_box_literals(gt.text), cfg.lexical_weights);
    add_lexical(r.components, lex);
    r.components["detection"] = det.reward;
    r.components["det_precision"] = det.precision;
    r.value = (lex.combined + det.reward) / 2.0;
    return r;
}

TaskAccuracy hslr(const std::string& answer, const std::string& gt_text, const RewardConfig& cfg) {
    TaskAccuracy r;
    const double sbert = sbert_reward(answer, gt_text, *cfg.embedding_provider);
    const LexicalScores lex = lexical_scores(answer, gt_text, cfg.lexical_weights);
    add_lexical(r.components, lex);
    r.components["sbert_cos"] = sbert;
    r.value = (sbert + lex.combined) / 2.0;
    return r;
}

TaskAccuracy task_accuracy_reward(TaskKind task, const std::string& answer, const GroundTruth& gt,
                                  const RewardConfig& cfg) {
    validate_reward_config(cfg);
    TaskAccuracy r;
    switch (task) {
    case TaskKind::Classification: {
        const auto& labels = expect_truth<LabelSet>(task, gt).labels;
        const LabelMatchCounts c = count_labels(answer, labels, cfg.label_vocabulary);
        r.value = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn_);
        r.components["recall"] = r.value;
        const std::size_t predicted = c.tp + c.fp;
        r.components["label_precision"] =
            predicted == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(predicted);
        break;
    }
    case TaskKind::ImageCaptioning: {
        const auto& text = expect_truth<TextTruth>(task, gt).text;
        r.value = levenshtein_ratio(answer, text);
        r.components["levenshtein_ratio"] = r.value;
        break;
    }
    case TaskKind::VQA: {
        const auto& text = expect_truth<TextTruth>(task, gt).text;
        r.value = jaccard(tokenize(answer), tokenize(text));
        r.components["jaccard"] = r.value;
        break;
    }
    case TaskKind::RegionCaptioning: {
        const auto& text = expect_truth<TextTruth>(task, gt).text;
        r.value = sbert_reward(answer, text, *cfg.embedding_provider);
        r.components["sbert_cos"] = r.value;
        break;
    }
    case TaskKind::ReferredObjectDetection: {
        const auto& boxes = expect_truth<BoxesTruth>(task, gt).boxes;
        const DetectionMatch det = detection_match(parse_boxes(answer), boxes, cfg.detection_mode, cfg.hbb_conversion);
        r.value = det.reward;
        r.components["iou"] = det.reward;
        r.components["det_precision"] = det.precision;
        break;
    }
    case TaskKind::Grounding: {
        r = lmgr(answer, expect_truth<BoxesWithText>(task, gt), cfg);
        if (cfg.grounding_reward == GroundingReward::LexicalOnly) {
            r.value = r.components.at("lexical");
        } else if (cfg.grounding_reward == GroundingReward::DetectionOnly) {
            r.value = r.components.at("detection");
        }
        break;
    }
    case TaskKind::ChangeDetectionCaption:
        r = hslr(answer, expect_truth<TextTruth>(task, gt).text, cfg);
        break;
    }
    return r;
}

ScoreRecord score_candidate(const Prompt& prompt, const Candidate& cand, const RewardConfig& cfg,
                            std::size_t candidate_index) {
    const ParsedResponse parsed =
        parse_response(cand.raw_response, FormatOptions{cfg.format_ordering_required});
    const double format = format_reward(parsed);
    TaskAccuracy acc =
        task_accuracy_reward(prompt.task, answer_or_empty(parsed), prompt.ground_truth, cfg);

    ScoreRecord rec;
    rec.prompt_id = prompt.id;
    rec.candidate_index = candidate_index;
    rec.breakdown = RewardBreakdown::make(format, acc.value, std::move(acc.components));
    rec.parsed = {parsed.think.has_value(), parsed.answer.has_value(), parsed.well_formed};
    rec.provider_name = cfg.embedding_provider->name();
    return rec;
}

std::vector<ScoreRecord> score_group(const CandidateGroup& group, const RewardConfig& cfg,
                                     std::size_t workers) {
    validate_group(group);
    validate_reward_config(cfg);
    const std::size_t k = group.candidates.size();
    std::vector<ScoreRecord> out(k);
    workers = std::clamp<std::size_t>(workers, 1, k);
    if (workers == 1) {
        for (std::size_t i = 0; i < k; ++i) {
            out[i] = score_candidate(group.prompt, group.candidates[i], cfg, i);
        }
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < k; i = next++) {
                    out[i] = score_candidate(group.prompt, group.candidates[i], cfg, i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

} // namespace grl
