#include "grl/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grl/error.hpp"
#include "grl/grpo.hpp"

namespace grl {

ToyPolicy::ToyPolicy(std::size_t num_prompts, std::size_t horizon, std::size_t vocab_size,
                     double temperature)
    : num_prompts_(num_prompts), horizon_(horizon), vocab_size_(vocab_size),
      logits_(num_prompts * horizon * vocab_size, 0.0) {
    if (num_prompts == 0 || horizon == 0 || vocab_size < 2) {
        throw Error(ErrorCode::InvalidArgument, "toy policy needs prompts, horizon and >= 2 tokens");
    }
    set_temperature(temperature);
}

void ToyPolicy::set_temperature(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
    }
    temperature_ = t;
}

std::size_t ToyPolicy::offset(std::size_t prompt, std::size_t position) const {
    if (prompt >= num_prompts_ || position >= horizon_) {
        throw Error(ErrorCode::InvalidArgument, "policy index out of range");
    }
    return (prompt * horizon_ + position) * vocab_size_;
}

std::span<double> ToyPolicy::logits(std::size_t prompt, std::size_t position) {
    return std::span<double>(logits_).subspan(offset(prompt, position), vocab_size_);
}

std::span<const double> ToyPolicy::logits(std::size_t prompt, std::size_t position) const {
    return std::span<const double>(logits_).subspan(offset(prompt, position), vocab_size_);
}

std::vector<double> ToyPolicy::log_distribution(std::size_t prompt, std::size_t position) const {
    const auto z = logits(prompt, position);
    std::vector<double> out(z.size());
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t v = 0; v < z.size(); ++v) {
        out[v] = (z[v] - zmax) / temperature_;
        sum += std::exp(out[v]);
    }
    const double log_sum = std::log(sum);
    for (double& x : out) x -= log_sum;
    return out;
}

std::vector<double> ToyPolicy::distribution(std::size_t prompt, std::size_t position) const {
    std::vector<double> p = log_distribution(prompt, position);
    for (double& x : p) x = std::exp(x);
    return p;
}

double ToyPolicy::sequence_logprob(std::size_t prompt, std::span<const std::size_t> tokens) const {
    if (tokens.size() != horizon_) {
        throw Error(ErrorCode::InvalidArgument, "response length " + std::to_string(tokens.size()) +
                                                    " differs from horizon " + std::to_string(horizon_));
    }
    double lp = 0.0;
    for (std::size_t t = 0; t < horizon_; ++t) {
        if (tokens[t] >= vocab_size_) {
            throw Error(ErrorCode::TokenOutOfVocabulary, "token id " + std::to_string(tokens[t]));
        }
        lp += log_distribution(prompt, t)[tokens[t]];
    }
    return lp;
}

TokenSequence ToyPolicy::greedy(std::size_t prompt) const {
    TokenSequence out(horizon_);
    for (std::size_t t = 0; t < horizon_; ++t) {
        const auto z = logits(prompt, t);
        out[t] = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    }
    return out;
}

TokenSequence ToyPolicy::sample(std::size_t prompt, std::mt19937_64& rng) const {
    TokenSequence out(horizon_);
    for (std::size_t t = 0; t < horizon_; ++t) {
        const std::vector<double> p = distribution(prompt, t);
        const double u = uniform01(rng);
        double acc = 0.0;
        std::size_t pick = p.size() - 1;
        for (std::size_t v = 0; v < p.size(); ++v) {
            acc += p[v];
            if (u < acc) {
                pick = v;
                break;
            }
        }
        out[t] = pick;
    }
    return out;
}

double policy_kl(const ToyPolicy& policy, const ToyPolicy& ref, std::size_t prompt) {
    if (policy.horizon() != ref.horizon() || policy.vocab_size() != ref.vocab_size()) {
        throw Error(ErrorCode::SupportMismatch, "policies have different response spaces");
    }
    double kl = 0.0;
    for (std::size_t t = 0; t < policy.horizon(); ++t) {
        kl += kl_penalty_exact(policy.distribution(prompt, t), ref.distribution(prompt, t));
    }
    return kl;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto splitmix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

} // namespace grl
