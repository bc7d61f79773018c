#include "grl/toy_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "grl/geometry.hpp"
#include "grl/text_metrics.hpp"

namespace grl {
namespace {

constexpr std::size_t kPad = 0;
constexpr std::size_t kThinkOpen = 1;
constexpr std::size_t kThinkClose = 2;
constexpr std::size_t kAnswerOpen = 3;
constexpr std::size_t kAnswerClose = 4;
constexpr std::size_t kThinkWords = 2;

const std::vector<std::string> kThinkPool = {" the", " image", " shows", " many", " objects", " here"};
const std::vector<std::string> kVqaPool = {" yes", " no",   " zero", " one",   " two",
                                           " three", " four", " five", " urban", " rural"};
const std::vector<std::string> kLabelPool = {" forest", " water", " urban", " farmland",
                                             " beach",  " desert", " snow", " grassland"};
const std::vector<std::string> kCaptionPool = {" large", " small",    " white",  " red",
                                               " plane", " ship",     " car",    " building",
                                               " near",  " runway",   " harbor", " road"};
constexpr std::size_t kBoxAnchors = 4;

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

// Indices of `count` distinct pool entries in increasing order.
std::vector<std::size_t> pick_distinct(std::mt19937_64& rng, std::size_t n, std::size_t count) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + pick(rng, n - i)]);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// Anchors plus one shifted, rotated twin each, so distractors overlap their
// anchor partially.
std::vector<RotatedBox> make_box_pool(std::mt19937_64& rng) {
    std::vector<RotatedBox> pool;
    for (std::size_t a = 0; a < kBoxAnchors; ++a) {
        RotatedBox b;
        b.cx = std::round(60.0 + uniform01(rng) * 328.0);
        b.cy = std::round(60.0 + uniform01(rng) * 328.0);
        b.w = std::round(30.0 + uniform01(rng) * 70.0);
        b.h = std::round(20.0 + uniform01(rng) * 50.0);
        b.angle_deg = std::round(-60.0 + uniform01(rng) * 120.0);
        pool.push_back(b);
    }
    for (std::size_t a = 0; a < kBoxAnchors; ++a) {
        RotatedBox b = pool[a];
        b.cx += 0.3 * b.w;
        b.angle_deg = normalize_angle(b.angle_deg + 20.0);
        pool.push_back(b);
    }
    return pool;
}

struct AnswerPlan {
    std::vector<std::string> correct;
    std::vector<std::string> distractor;
};

} // namespace

std::optional<std::size_t> ToyVocabulary::find(std::string_view surface) const {
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
        if (surfaces[i] == surface) return i;
    }
    return std::nullopt;
}

std::string ToyVocabulary::detokenize(std::span<const std::size_t> tokens) const {
    std::string out;
    for (std::size_t t : tokens) {
        if (t >= surfaces.size()) {
            throw Error(ErrorCode::TokenOutOfVocabulary, "token id " + std::to_string(t));
        }
        out += surfaces[t];
    }
    return out;
}

RewardConfig SyntheticTask::reward_config() const {
    RewardConfig cfg;
    cfg.label_vocabulary = label_vocabulary;
    return cfg;
}

SyntheticTask make_synthetic_task(const SyntheticTaskOptions& opts) {
    if (opts.num_prompts == 0) throw Error(ErrorCode::InvalidArgument, "synthetic task needs prompts");
    if (opts.correct_demos > opts.demos_per_prompt) {
        throw Error(ErrorCode::InvalidArgument, "correct_demos exceeds demos_per_prompt");
    }
    std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(opts.kind)));

    SyntheticTask task;
    task.kind = opts.kind;
    task.horizon = opts.horizon;
    auto& surf = task.vocab.surfaces;
    surf = {"", "<think>", "</think>", "<answer>", "</answer>"};
    surf.insert(surf.end(), kThinkPool.begin(), kThinkPool.end());

    std::vector<RotatedBox> box_pool;
    std::vector<std::string> box_surfaces;
    switch (opts.kind) {
    case TaskKind::VQA: surf.insert(surf.end(), kVqaPool.begin(), kVqaPool.end()); break;
    case TaskKind::Classification:
        surf.insert(surf.end(), kLabelPool.begin(), kLabelPool.end());
        surf.push_back(",");
        for (const auto& l : kLabelPool) task.label_vocabulary.insert(normalize_label(l));
        break;
    case TaskKind::ReferredObjectDetection:
    case TaskKind::Grounding:
        box_pool = make_box_pool(rng);
        for (const auto& b : box_pool) box_surfaces.push_back(" " + format_box(b));
        surf.insert(surf.end(), box_surfaces.begin(), box_surfaces.end());
        if (opts.kind == TaskKind::Grounding) {
            surf.insert(surf.end(), kCaptionPool.begin(), kCaptionPool.end());
        }
        break;
    case TaskKind::ImageCaptioning:
    case TaskKind::RegionCaptioning:
    case TaskKind::ChangeDetectionCaption:
        surf.insert(surf.end(), kCaptionPool.begin(), kCaptionPool.end());
        break;
    }
    if (surf.size() > opts.vocab_size) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string(task_name(opts.kind)) + " needs a vocabulary of at least " +
                        std::to_string(surf.size()) + " tokens");
    }
    for (std::size_t f = 0; surf.size() < opts.vocab_size; ++f) surf.push_back(" f" + std::to_string(f));

    auto token = [&](const std::string& s) { return *task.vocab.find(s); };
    auto caption = [&](std::mt19937_64& r) {
        std::vector<std::string> words;
        for (std::size_t i = 0; i < 3; ++i) words.push_back(kCaptionPool[pick(r, kCaptionPool.size())]);
        return words;
    };
    auto join_words = [](const std::vector<std::string>& words) {
        std::string out;
        for (const auto& w : words) out += w;
        return std::string(trim(out));
    };

    for (std::size_t i = 0; i < opts.num_prompts; ++i) {
        Prompt prompt;
        prompt.id = std::string(task_name(opts.kind)) + "-" + std::to_string(i);
        prompt.image_ref = "synthetic://" + prompt.id;
        prompt.task = opts.kind;

        AnswerPlan plan;
        switch (opts.kind) {
        case TaskKind::VQA: {
            const std::size_t c = pick(rng, kVqaPool.size());
            const std::size_t d = (c + 1 + pick(rng, kVqaPool.size() - 1)) % kVqaPool.size();
            plan.correct = {kVqaPool[c]};
            plan.distractor = {kVqaPool[d]};
            prompt.query_text = "question " + std::to_string(i) + ": what is shown?";
            prompt.ground_truth = TextTruth{std::string(trim(kVqaPool[c]))};
            break;
        }
        case TaskKind::Classification: {
            const auto c = pick_distinct(rng, kLabelPool.size(), 2);
            auto d = pick_distinct(rng, kLabelPool.size(), 2);
            while (d == c) d = pick_distinct(rng, kLabelPool.size(), 2);
            plan.correct = {kLabelPool[c[0]], ",", kLabelPool[c[1]]};
            plan.distractor = {kLabelPool[d[0]], ",", kLabelPool[d[1]]};
            prompt.query_text = "scene " + std::to_string(i) + ": list the land-cover classes";
            prompt.ground_truth =
                LabelSet{{normalize_label(kLabelPool[c[0]]), normalize_label(kLabelPool[c[1]])}};
            break;
        }
        case TaskKind::ReferredObjectDetection: {
            const std::size_t c = pick(rng, kBoxAnchors);
            plan.correct = {box_surfaces[c]};
            plan.distractor = {box_surfaces[c + kBoxAnchors]};
            prompt.query_text = "locate object " + std::to_string(i);
            prompt.ground_truth = BoxesTruth{{box_pool[c]}};
            break;
        }
        case TaskKind::Grounding: {
            const std::size_t c = pick(rng, kBoxAnchors);
            const auto words = caption(rng);
            auto other = caption(rng);
            while (other == words) other = caption(rng);
            plan.correct = {box_surfaces[c]};
            plan.correct.insert(plan.correct.end(), words.begin(), words.end());
            plan.distractor = {box_surfaces[c + kBoxAnchors]};
            plan.distractor.insert(plan.distractor.end(), other.begin(), other.end());
            prompt.query_text = "describe and locate region " + std::to_string(i);
            prompt.ground_truth = BoxesWithText{{box_pool[c]}, join_words(words)};
            break;
        }
        case TaskKind::ImageCaptioning:
        case TaskKind::RegionCaptioning:
        case TaskKind::ChangeDetectionCaption: {
            const auto words = caption(rng);
            auto other = caption(rng);
            while (other == words) other = caption(rng);
            plan.correct = words;
            plan.distractor = other;
            prompt.query_text = "caption image " + std::to_string(i);
            prompt.ground_truth = TextTruth{join_words(words)};
            break;
        }
        }

        std::vector<std::size_t> think;
        for (std::size_t w = 0; w < kThinkWords; ++w) think.push_back(token(kThinkPool[pick(rng, kThinkPool.size())]));
        auto build = [&](const std::vector<std::string>& answer) {
            TokenSequence seq = {kThinkOpen};
            seq.insert(seq.end(), think.begin(), think.end());
            seq.push_back(kThinkClose);
            seq.push_back(kAnswerOpen);
            for (const auto& a : answer) seq.push_back(token(a));
            seq.push_back(kAnswerClose);
            if (seq.size() > opts.horizon) {
                throw Error(ErrorCode::InvalidArgument,
                            "horizon " + std::to_string(opts.horizon) + " too short for " +
                                std::string(task_name(opts.kind)));
            }
            seq.resize(opts.horizon, kPad);
            return seq;
        };
        const TokenSequence correct = build(plan.correct);
        const TokenSequence distractor = build(plan.distractor);
        task.reference_answers.push_back(correct);
        for (std::size_t d = 0; d < opts.demos_per_prompt; ++d) {
            task.sft_examples.push_back({i, d < opts.correct_demos ? correct : distractor});
        }
        task.prompts.push_back(std::move(prompt));
    }
    return task;
}

ToyPolicy init_policy(const SyntheticTask& task, double temperature, double init_scale,
                      std::uint64_t seed) {
    ToyPolicy policy(task.prompts.size(), task.horizon, task.vocab.size(), temperature);
    std::mt19937_64 rng(derive_seed(seed, 0x1417));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& z : policy.parameters()) z = init_scale * normal(rng);
    return policy;
}

SftLoss sft_loss_and_grad(const ToyPolicy& policy, std::span<const SftExample> examples) {
    SftLoss out;
    out.gradient.assign(policy.parameter_count(), 0.0);
    if (examples.empty()) return out;
    const double inv_n = 1.0 / static_cast<double>(examples.size());
    const double inv_t = 1.0 / policy.temperature();
    for (const auto& ex : examples) {
        if (ex.target.size() > policy.horizon()) {
            throw Error(ErrorCode::InvalidArgument, "SFT target longer than the horizon");
        }
        for (std::size_t t = 0; t < policy.horizon(); ++t) {
            const std::size_t y = t < ex.target.size() ? ex.target[t] : kPad;
            if (y >= policy.vocab_size()) {
                throw Error(ErrorCode::TokenOutOfVocabulary, "target token id " + std::to_string(y));
            }
            const auto logp = policy.log_distribution(ex.prompt_index, t);
            out.loss -= inv_n * logp[y];
            double* g = out.gradient.data() + policy.offset(ex.prompt_index, t);
            for (std::size_t v = 0; v < logp.size(); ++v) g[v] += inv_n * inv_t * std::exp(logp[v]);
            g[y] -= inv_n * inv_t;
        }
    }
    return out;
}

SampledGroup sample_group(const ToyPolicy& policy, const SyntheticTask& task,
                          std::size_t prompt_index, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::GroupTooSmall, "sample_group needs K >= 2");
    if (prompt_index >= task.prompts.size()) {
        throw Error(ErrorCode::InvalidArgument, "prompt index out of range");
    }
    SampledGroup out;
    out.group.prompt = task.prompts[prompt_index];
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        TokenSequence s = policy.sample(prompt_index, rng);
        Candidate c;
        c.raw_response = task.vocab.detokenize(s);
        c.logprob_old = policy.sequence_logprob(prompt_index, s);
        out.group.candidates.push_back(std::move(c));
        out.tokens.push_back(std::move(s));
    }
    return out;
}

EvalReport evaluate(const ToyPolicy& policy, const SyntheticTask& task, const RewardConfig& cfg,
                    std::uint64_t /*seed*/) {
    EvalReport r;
    if (task.prompts.empty()) return r;
    std::map<std::string, std::pair<double, std::size_t>> comp;
    std::map<std::string, std::pair<double, std::size_t>> per_task;
    for (std::size_t i = 0; i < task.prompts.size(); ++i) {
        const TokenSequence s = policy.greedy(i);
        const Candidate cand{task.vocab.detokenize(s), std::nullopt};
        const ScoreRecord rec = score_candidate(task.prompts[i], cand, cfg, 0);
        r.mean_total += rec.breakdown.total();
        r.mean_format += rec.breakdown.format();
        r.mean_task_acc += rec.breakdown.task_acc();
        for (const auto& [name, v] : rec.breakdown.components()) {
            comp[name].first += v;
            ++comp[name].second;
        }
        auto& pt = per_task[std::string(task_name(task.prompts[i].task))];
        pt.first += rec.breakdown.total();
        ++pt.second;
    }
    const double n = static_cast<double>(task.prompts.size());
    r.mean_total /= n;
    r.mean_format /= n;
    r.mean_task_acc /= n;
    for (const auto& [name, acc] : comp) r.component_means[name] = acc.first / static_cast<double>(acc.second);
    for (const auto& [name, acc] : per_task) r.per_task_total[name] = acc.first / static_cast<double>(acc.second);
    return r;
}

TrainReport train_sft(ToyPolicy& policy, const SyntheticTask& task, std::size_t iters, double lr) {
    if (!(lr >= 0.0)) throw Error(ErrorCode::InvalidArgument, "SFT learning rate must be >= 0");
    const RewardConfig cfg = task.reward_config();
    TrainReport report;
    report.stage = "sft";
    report.initial_eval = evaluate(policy, task, cfg);
    for (std::size_t it = 0; it < iters; ++it) {
        const SftLoss l = sft_loss_and_grad(policy, task.sft_examples);
        if (!std::isfinite(l.loss)) {
            throw Error(ErrorCode::NumericalFailure,
                        "SFT loss is not finite at iteration " + std::to_string(it));
        }
        IterationStats st;
        st.iteration = it;
        st.loss = l.loss;
        report.iterations.push_back(st);
        auto theta = policy.parameters();
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * l.gradient[j];
    }
    report.final_eval = evaluate(policy, task, cfg);
    return report;
}

TrainReport train_grpo(ToyPolicy& policy, const SyntheticTask& task, const GrpoConfig& cfg,
                       const RewardConfig& reward_cfg, const GrpoTrainOptions& opts) {
    validate_grpo_config(cfg);
    validate_reward_config(reward_cfg);
    if (!(opts.lr >= 0.0)) throw Error(ErrorCode::InvalidArgument, "GRPO learning rate must be >= 0");
    policy.set_temperature(cfg.temperature);
    const ToyPolicy ref = policy;
    const std::size_t num_prompts = task.prompts.size();
    const double inv_p = 1.0 / static_cast<double>(num_prompts);

    TrainReport report;
    report.stage = "grpo";
    report.initial_eval = evaluate(policy, task, reward_cfg, opts.seed);
    std::vector<double> grad(policy.parameter_count());
    for (std::size_t it = 0; it < opts.iters; ++it) {
        for (double z : policy.parameters()) {
            if (!std::isfinite(z)) {
                throw Error(ErrorCode::NumericalFailure,
                            "policy logits are not finite at iteration " + std::to_string(it));
            }
        }
        const ToyPolicy old = policy;
        std::fill(grad.begin(), grad.end(), 0.0);
        IterationStats st;
        st.iteration = it;
        double reward_count = 0.0;
        for (std::size_t p = 0; p < num_prompts; ++p) {
            SampledGroup sg = sample_group(old, task, p, cfg.group_size, derive_seed(opts.seed, it, p));
            std::vector<double> rewards(sg.group.candidates.size());
            if (opts.reward_hook) {
                for (std::size_t i = 0; i < rewards.size(); ++i) {
                    rewards[i] = opts.reward_hook(sg.group.prompt, sg.group.candidates[i]);
                }
            } else {
                const auto records = score_group(sg.group, reward_cfg);
                for (std::size_t i = 0; i < rewards.size(); ++i) {
                    rewards[i] = records[i].breakdown.total();
                    st.mean_format += records[i].breakdown.format();
                    st.mean_task_acc += records[i].breakdown.task_acc();
                }
            }
            for (double r : rewards) st.mean_reward += r;
            reward_count += static_cast<double>(rewards.size());

            const GroupAdvantages adv = group_advantages(rewards, cfg.std_floor);
            double adv_ss = 0.0;
            for (double a : adv.advantages) adv_ss += a * a;
            st.mean_adv_std += std::sqrt(adv_ss / static_cast<double>(adv.advantages.size()));

            GroupRollout rollout;
            rollout.prompt_index = p;
            rollout.responses = std::move(sg.tokens);
            for (const auto& c : sg.group.candidates) rollout.logprob_old.push_back(*c.logprob_old);
            rollout.advantages = adv.advantages;

            st.kl += policy_kl(old, ref, p);
            st.objective += grpo_group_objective(old, ref, rollout, cfg);
            const auto g = grpo_gradient(old, ref, rollout, cfg);
            for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += inv_p * g[j];
        }
        st.mean_reward /= reward_count;
        st.mean_format /= reward_count;
        st.mean_task_acc /= reward_count;
        st.mean_adv_std *= inv_p;
        st.kl *= inv_p;
        st.objective *= inv_p;
        if (!std::isfinite(st.objective) || !std::isfinite(st.kl)) {
            throw Error(ErrorCode::NumericalFailure,
                        "GRPO objective is not finite at iteration " + std::to_string(it));
        }
        report.iterations.push_back(st);
        auto theta = policy.parameters();
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] += opts.lr * grad[j];
    }
    report.final_eval = evaluate(policy, task, reward_cfg, opts.seed);
    return report;
}

} // namespace grl
