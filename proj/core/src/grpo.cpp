#include "grl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grl/error.hpp"

namespace grl {

void validate_grpo_config(const GrpoConfig& cfg) {
    if (!(cfg.clip_eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "clip_eps must be > 0");
    if (!(cfg.kl_beta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "kl_beta must be >= 0");
    if (cfg.group_size < 2) throw Error(ErrorCode::GroupTooSmall, "group_size must be >= 2");
    if (!(cfg.std_floor > 0.0)) throw Error(ErrorCode::InvalidArgument, "std_floor must be > 0");
    if (!(cfg.temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
}

GroupAdvantages group_advantages(std::span<const double> rewards, double std_floor) {
    if (rewards.size() < 2) {
        throw Error(ErrorCode::GroupTooSmall,
                    "advantages need K >= 2 rewards, got " + std::to_string(rewards.size()));
    }
    GroupAdvantages g;
    g.rewards.assign(rewards.begin(), rewards.end());
    for (double r : rewards) {
        if (!std::isfinite(r)) throw Error(ErrorCode::NonFiniteReward, "reward is not finite");
    }
    const double k = static_cast<double>(rewards.size());
    double sum = 0.0;
    for (double r : rewards) sum += r;
    g.mean = sum / k;
    double ss = 0.0;
    for (double r : rewards) ss += (r - g.mean) * (r - g.mean);
    g.std = std::sqrt(ss / k);

    g.advantages.assign(rewards.size(), 0.0);
    g.degenerate = !(g.std >= std_floor);
    if (!g.degenerate) {
        for (std::size_t i = 0; i < rewards.size(); ++i) {
            g.advantages[i] = (rewards[i] - g.mean) / g.std;
        }
    }
    return g;
}

double policy_ratio(const PolicyEval& eval) { return std::exp(eval.logprob_new - eval.logprob_old); }

double clipped_term(double ratio, double advantage, double clip_eps) {
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    return std::min(ratio * advantage, clipped * advantage);
}

bool clip_active(double ratio, double advantage, double clip_eps) {
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    return clipped * advantage < ratio * advantage;
}

double kl_penalty_exact(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw Error(ErrorCode::SupportMismatch, "distributions have different support sizes");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (!(q[i] > 0.0)) {
            throw Error(ErrorCode::SupportMismatch,
                        "reference assigns zero probability to outcome " + std::to_string(i));
        }
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

double kl_penalty_sampled(std::span<const PolicyEval> evals) {
    if (evals.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& e : evals) {
        const double log_r = e.logprob_ref - e.logprob_new;
        sum += std::exp(log_r) - log_r - 1.0;
    }
    return sum / static_cast<double>(evals.size());
}

double grpo_objective(std::span<const PolicyEval> evals, std::span<const double> advantages,
                      double kl, const GrpoConfig& cfg) {
    if (evals.size() < 2) throw Error(ErrorCode::GroupTooSmall, "objective needs K >= 2");
    if (advantages.size() != evals.size()) {
        throw Error(ErrorCode::InvalidArgument, "advantage count differs from group size");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < evals.size(); ++i) {
        sum += clipped_term(policy_ratio(evals[i]), advantages[i], cfg.clip_eps);
    }
    return sum / static_cast<double>(evals.size()) - cfg.kl_beta * kl;
}

std::vector<PolicyEval> evaluate_rollout(const ToyPolicy& policy, const ToyPolicy& ref,
                                         const GroupRollout& rollout) {
    if (rollout.logprob_old.size() != rollout.responses.size()) {
        throw Error(ErrorCode::InvalidArgument, "rollout is missing old log-probabilities");
    }
    std::vector<PolicyEval> evals(rollout.responses.size());
    for (std::size_t i = 0; i < evals.size(); ++i) {
        evals[i].logprob_new = policy.sequence_logprob(rollout.prompt_index, rollout.responses[i]);
        evals[i].logprob_old = rollout.logprob_old[i];
        evals[i].logprob_ref = ref.sequence_logprob(rollout.prompt_index, rollout.responses[i]);
    }
    return evals;
}

double grpo_group_objective(const ToyPolicy& policy, const ToyPolicy& ref,
                            const GroupRollout& rollout, const GrpoConfig& cfg) {
    const auto evals = evaluate_rollout(policy, ref, rollout);
    const double kl = cfg.kl_mode == KlMode::Exact ? policy_kl(policy, ref, rollout.prompt_index)
                                                   : kl_penalty_sampled(evals);
    return grpo_objective(evals, rollout.advantages, kl, cfg);
}

std::vector<double> grpo_gradient(const ToyPolicy& policy, const ToyPolicy& ref,
                                  const GroupRollout& rollout, const GrpoConfig& cfg) {
    const std::size_t k = rollout.responses.size();
    if (k < 2) throw Error(ErrorCode::GroupTooSmall, "gradient needs K >= 2");
    if (rollout.advantages.size() != k) {
        throw Error(ErrorCode::InvalidArgument, "advantage count differs from group size");
    }
    const auto evals = evaluate_rollout(policy, ref, rollout);
    const std::size_t prompt = rollout.prompt_index;
    const std::size_t horizon = policy.horizon();
    const std::size_t vocab = policy.vocab_size();
    const double inv_t = 1.0 / policy.temperature();
    const double inv_k = 1.0 / static_cast<double>(k);

    std::vector<double> grad(policy.parameter_count(), 0.0);
    std::vector<std::vector<double>> p(horizon), logp(horizon), logq(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        logp[t] = policy.log_distribution(prompt, t);
        p[t] = policy.distribution(prompt, t);
        logq[t] = ref.log_distribution(prompt, t);
    }

    // d/dz log pi(s) at position t is (onehot(s_t) - p_t) / T.
    auto add_score = [&](const TokenSequence& s, double weight) {
        for (std::size_t t = 0; t < horizon; ++t) {
            double* g = grad.data() + policy.offset(prompt, t);
            for (std::size_t v = 0; v < vocab; ++v) g[v] -= weight * inv_t * p[t][v];
            g[s[t]] += weight * inv_t;
        }
    };

    for (std::size_t i = 0; i < k; ++i) {
        const double ratio = policy_ratio(evals[i]);
        const double a = rollout.advantages[i];
        if (!clip_active(ratio, a, cfg.clip_eps)) add_score(rollout.responses[i], inv_k * a * ratio);
    }

    if (cfg.kl_beta != 0.0) {
        if (cfg.kl_mode == KlMode::Exact) {
            // d KL_t / d z_u = p_u (log p_u - log q_u - KL_t) / T
            for (std::size_t t = 0; t < horizon; ++t) {
                double kl_t = 0.0;
                for (std::size_t v = 0; v < vocab; ++v) kl_t += p[t][v] * (logp[t][v] - logq[t][v]);
                double* g = grad.data() + policy.offset(prompt, t);
                for (std::size_t v = 0; v < vocab; ++v) {
                    g[v] -= cfg.kl_beta * inv_t * p[t][v] * (logp[t][v] - logq[t][v] - kl_t);
                }
            }
        } else {
            // d/dz (r - log r - 1) with r = pi_ref / pi is (1 - r) d log pi.
            for (std::size_t i = 0; i < k; ++i) {
                const double r = std::exp(evals[i].logprob_ref - evals[i].logprob_new);
                add_score(rollout.responses[i], -cfg.kl_beta * inv_k * (1.0 - r));
            }
        }
    }
    return grad;
}

} // namespace grl
