#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grl/grpo.hpp"
#include "grl/reward_engine.hpp"
#include "grl/toy_policy.hpp"
#include "grl/types.hpp"

namespace grl {

/// Token surfaces of the toy response space. Token 0 is padding (empty
/// surface); 1-4 are the think/answer tags.
struct ToyVocabulary {
    std::vector<std::string> surfaces;

    std::size_t size() const { return surfaces.size(); }
    std::optional<std::size_t> find(std::string_view surface) const;
    /// Concatenates surfaces. Throws TokenOutOfVocabulary for unknown ids.
    std::string detokenize(std::span<const std::size_t> tokens) const;
};

struct SftExample {
    std::size_t prompt_index = 0;
    TokenSequence target;
};

struct SyntheticTaskOptions {
    TaskKind kind = TaskKind::VQA;
    std::size_t num_prompts = 16;
    std::size_t horizon = 12;
    std::size_t vocab_size = 32;
    /// Demonstrations per prompt in the SFT set ...
    std::size_t demos_per_prompt = 3;
    /// ... of which this many carry the correct answer; the rest repeat one
    /// fixed distractor answer for that prompt.
    std::size_t correct_demos = 1;
    std::uint64_t seed = 7;
};

/// Programmatic stand-in for an instruction dataset: prompts with ground
/// truth, the reference response that scores task_acc = 1 for each prompt,
/// and the (noisy) SFT demonstrations.
struct SyntheticTask {
    TaskKind kind = TaskKind::VQA;
    ToyVocabulary vocab;
    std::size_t horizon = 0;
    std::vector<Prompt> prompts;
    std::vector<TokenSequence> reference_answers;
    std::vector<SftExample> sft_examples;
    /// Label vocabulary for classification tasks (empty otherwise).
    std::set<std::string> label_vocabulary;

    /// Default reward configuration carrying this task's label vocabulary.
    RewardConfig reward_config() const;
};

SyntheticTask make_synthetic_task(const SyntheticTaskOptions& opts);

/// Policy over the task's response space with logits drawn from
/// N(0, init_scale^2).
ToyPolicy init_policy(const SyntheticTask& task, double temperature, double init_scale,
                      std::uint64_t seed);

struct SftLoss {
    /// Mean over examples of -sum_t log pi(y_t).
    double loss = 0.0;
    std::vector<double> gradient;
};

/// Throws TokenOutOfVocabulary for target tokens outside the vocabulary and
/// InvalidArgument for targets longer than the horizon. Shorter targets are
/// padded with token 0.
SftLoss sft_loss_and_grad(const ToyPolicy& policy, std::span<const SftExample> examples);

struct SampledGroup {
    CandidateGroup group;
    std::vector<TokenSequence> tokens;
};

/// K samples from the policy at its temperature, each with logprob_old set.
SampledGroup sample_group(const ToyPolicy& policy, const SyntheticTask& task,
                          std::size_t prompt_index, std::size_t k, std::uint64_t seed);

struct EvalReport {
    double mean_total = 0.0;
    double mean_format = 0.0;
    double mean_task_acc = 0.0;
    std::map<std::string, double> component_means;
    /// Mean total reward per task name.
    std::map<std::string, double> per_task_total;
};

/// Greedy decoding of every prompt, scored by the reward engine. The seed
/// is accepted for interface stability; greedy decoding does not consume it.
EvalReport evaluate(const ToyPolicy& policy, const SyntheticTask& task, const RewardConfig& cfg,
                    std::uint64_t seed = 0);

struct IterationStats {
    std::size_t iteration = 0;
    double loss = 0.0;
    double mean_reward = 0.0;
    double mean_format = 0.0;
    double mean_task_acc = 0.0;
    double mean_adv_std = 0.0;
    double kl = 0.0;
    double objective = 0.0;

    friend bool operator==(const IterationStats&, const IterationStats&) = default;
};

struct TrainReport {
    std::string stage;
    std::vector<IterationStats> iterations;
    EvalReport initial_eval;
    EvalReport final_eval;
};

/// Plain gradient descent on the SFT loss. Throws NumericalFailure naming
/// the iteration if the loss stops being finite.
TrainReport train_sft(ToyPolicy& policy, const SyntheticTask& task, std::size_t iters, double lr);

/// Overrides the reward engine; receives the prompt and candidate, returns r_i.
using RewardHook = std::function<double(const Prompt&, const Candidate&)>;

struct GrpoTrainOptions {
    std::size_t iters = 300;
    double lr = 1.0;
    std::uint64_t seed = 0;
    RewardHook reward_hook;
};

/// Each iteration: snapshot pi_old = pi; per prompt sample K candidates,
/// score, normalize advantages, accumulate the GRPO gradient; then one
/// ascent step on the mean objective over prompts. pi_ref is the policy as
/// passed in (the SFT checkpoint) and stays frozen. The policy temperature
/// is set to cfg.temperature.
TrainReport train_grpo(ToyPolicy& policy, const SyntheticTask& task, const GrpoConfig& cfg,
                       const RewardConfig& reward_cfg, const GrpoTrainOptions& opts);

} // namespace grl
