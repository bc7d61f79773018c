#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "grl/grpo.hpp"
#include "grl/reward_engine.hpp"
#include "grl/toy_lab.hpp"

namespace grl::cli {

/// Everything a command can be configured with. Loaded from a flat
/// `key = value` document; '#' starts a comment.
struct RunConfig {
    SyntheticTaskOptions task;
    std::optional<std::uint64_t> seed;
    double init_scale = 0.01;

    std::size_t sft_iters = 300;
    double sft_lr = 16.0;
    std::size_t grpo_iters = 300;
    double grpo_lr = 8.0;
    GrpoConfig grpo;

    LexicalWeights lexical_weights;
    DetectionMode detection_mode = DetectionMode::RBB;
    HbbConversion hbb_conversion = HbbConversion::ZeroAngle;
    GroundingReward grounding_reward = GroundingReward::Lmgr;
    std::set<std::string> label_vocabulary;
    bool format_ordering_required = true;

    std::optional<std::string> embed_endpoint;
    std::size_t hash_dim = HashEmbeddingProvider::kDefaultDimension;
    int embed_retries = 3;

    std::optional<std::string> report_path;
    std::optional<std::string> checkpoint_path;
};

/// Throws InvalidArgument ("line N: ...") for unknown keys or bad values.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);

} // namespace grl::cli
