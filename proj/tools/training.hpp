#pragma once

#include <cstdint>
#include <memory>

#include "grl/toy_lab.hpp"
#include "run_config.hpp"

namespace grl::cli {

struct TrainingOutcome {
    SyntheticTask task;
    RewardConfig reward_config;
    /// Greedy evaluation of the freshly initialized policy.
    EvalReport random_init_eval;
    TrainReport sft;
    TrainReport grpo;
    ToyPolicy policy;
};

/// Reward configuration for `task` with the run's reward settings applied.
RewardConfig make_reward_config(const SyntheticTask& task, const RunConfig& cfg,
                                std::shared_ptr<EmbeddingProvider> provider);

/// The policy `train` starts from: init_policy seeded from derive_seed(seed, 1).
ToyPolicy initial_policy(const SyntheticTask& task, const RunConfig& cfg, std::uint64_t seed);

/// SFT followed by GRPO, exactly as the `train` command runs it.
TrainingOutcome run_training(const RunConfig& cfg, std::uint64_t seed,
                             std::shared_ptr<EmbeddingProvider> provider);

} // namespace grl::cli
