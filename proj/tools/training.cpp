#include "training.hpp"

namespace grl::cli {

RewardConfig make_reward_config(const SyntheticTask& task, const RunConfig& cfg,
                                std::shared_ptr<EmbeddingProvider> provider) {
    RewardConfig rc = task.reward_config();
    rc.embedding_provider = std::move(provider);
    rc.lexical_weights = cfg.lexical_weights;
    rc.detection_mode = cfg.detection_mode;
    rc.hbb_conversion = cfg.hbb_conversion;
    rc.grounding_reward = cfg.grounding_reward;
    rc.label_vocabulary.insert(cfg.label_vocabulary.begin(), cfg.label_vocabulary.end());
    rc.format_ordering_required = cfg.format_ordering_required;
    validate_reward_config(rc);
    return rc;
}

ToyPolicy initial_policy(const SyntheticTask& task, const RunConfig& cfg, std::uint64_t seed) {
    return init_policy(task, cfg.grpo.temperature, cfg.init_scale, derive_seed(seed, 1));
}

TrainingOutcome run_training(const RunConfig& cfg, std::uint64_t seed,
                             std::shared_ptr<EmbeddingProvider> provider) {
    validate_grpo_config(cfg.grpo);
    TrainingOutcome out;
    out.task = make_synthetic_task(cfg.task);
    out.reward_config = make_reward_config(out.task, cfg, std::move(provider));
    out.policy = initial_policy(out.task, cfg, seed);
    out.random_init_eval = evaluate(out.policy, out.task, out.reward_config);
    out.sft = train_sft(out.policy, out.task, cfg.sft_iters, cfg.sft_lr);

    GrpoTrainOptions go;
    go.iters = cfg.grpo_iters;
    go.lr = cfg.grpo_lr;
    go.seed = derive_seed(seed, 2);
    out.grpo = train_grpo(out.policy, out.task, cfg.grpo, out.reward_config, go);
    return out;
}

} // namespace grl::cli
