#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grl/toy_policy.hpp"

namespace grl {

/// How the KL penalty is evaluated inside the objective.
enum class KlMode {
    /// Full expectation over the finite response space.
    Exact,
    /// Per-sample estimator pi_ref/pi - log(pi_ref/pi) - 1 averaged over the
    /// group; kept for parity experiments with sampled trainers.
    SampledK3,
};

struct GrpoConfig {
    double clip_eps = 0.2;
    double kl_beta = 0.04;
    std::size_t group_size = 8;
    double std_floor = 1e-8;
    double temperature = 0.9;
    KlMode kl_mode = KlMode::Exact;
};

/// Throws InvalidArgument when a field is outside its legal range.
void validate_grpo_config(const GrpoConfig& cfg);

struct GroupAdvantages {
    std::vector<double> rewards;
    double mean = 0.0;
    /// Population standard deviation (divides by K).
    double std = 0.0;
    std::vector<double> advantages;
    /// std < std_floor; all advantages are then zero.
    bool degenerate = false;
};

/// A_i = (r_i - mean) / std. Throws GroupTooSmall (K < 2) or NonFiniteReward.
GroupAdvantages group_advantages(std::span<const double> rewards, double std_floor = 1e-8);

struct PolicyEval {
    double logprob_new = 0.0;
    double logprob_old = 0.0;
    double logprob_ref = 0.0;
};

/// exp(logprob_new - logprob_old).
double policy_ratio(const PolicyEval& eval);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
double clipped_term(double ratio, double advantage, double clip_eps);

/// True when the min selects the clipped product and it is strictly smaller,
/// i.e. the term is locally constant in the ratio.
bool clip_active(double ratio, double advantage, double clip_eps);

/// sum_s p(s) log(p(s) / q(s)). Throws SupportMismatch when the supports
/// differ in size or q(s) = 0 where p(s) > 0.
double kl_penalty_exact(std::span<const double> p, std::span<const double> q);

/// Group mean of the k3 estimator evaluated at each candidate.
double kl_penalty_sampled(std::span<const PolicyEval> evals);

/// (1/K) sum_i clipped_term(rho_i, A_i, eps) - beta * kl.
double grpo_objective(std::span<const PolicyEval> evals, std::span<const double> advantages,
                      double kl, const GrpoConfig& cfg);

/// One sampled group for a toy-policy prompt.
struct GroupRollout {
    std::size_t prompt_index = 0;
    std::vector<TokenSequence> responses;
    /// log pi_old(s_i), recorded at sampling time.
    std::vector<double> logprob_old;
    std::vector<double> advantages;
};

/// Per-candidate log-probabilities of a rollout under (policy, old, ref).
std::vector<PolicyEval> evaluate_rollout(const ToyPolicy& policy, const ToyPolicy& ref,
                                         const GroupRollout& rollout);

/// The objective of one group at the current policy parameters.
double grpo_group_objective(const ToyPolicy& policy, const ToyPolicy& ref,
                            const GroupRollout& rollout, const GrpoConfig& cfg);

/// Analytic gradient of grpo_group_objective() with respect to every policy
/// logit (same layout as ToyPolicy::parameters()). Advantages are constants;
/// terms whose clip is active contribute nothing.
std::vector<double> grpo_gradient(const ToyPolicy& policy, const ToyPolicy& ref,
                                  const GroupRollout& rollout, const GrpoConfig& cfg);

} // namespace grl
