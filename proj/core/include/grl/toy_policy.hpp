#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace grl {

using TokenSequence = std::vector<std::size_t>;

/// Tabular categorical policy: an independent logit vector for every
/// (prompt, position). A response is one token per position, so the
/// response probability factorizes over positions:
///   pi(s | prompt) = prod_t softmax(z[prompt, t] / T)[s_t].
class ToyPolicy {
public:
    ToyPolicy() = default;
    ToyPolicy(std::size_t num_prompts, std::size_t horizon, std::size_t vocab_size,
              double temperature = 1.0);

    std::size_t num_prompts() const { return num_prompts_; }
    std::size_t horizon() const { return horizon_; }
    std::size_t vocab_size() const { return vocab_size_; }
    double temperature() const { return temperature_; }
    void set_temperature(double t);

    /// Flat parameter vector, laid out [prompt][position][token].
    std::span<double> parameters() { return logits_; }
    std::span<const double> parameters() const { return logits_; }
    std::size_t parameter_count() const { return logits_.size(); }
    std::size_t offset(std::size_t prompt, std::size_t position) const;

    std::span<double> logits(std::size_t prompt, std::size_t position);
    std::span<const double> logits(std::size_t prompt, std::size_t position) const;

    /// softmax(z / T) at one position.
    std::vector<double> distribution(std::size_t prompt, std::size_t position) const;
    std::vector<double> log_distribution(std::size_t prompt, std::size_t position) const;

    /// Sum of per-position token log-probabilities. Throws
    /// TokenOutOfVocabulary / InvalidArgument for bad tokens or lengths.
    double sequence_logprob(std::size_t prompt, std::span<const std::size_t> tokens) const;

    /// Per-position argmax; ties go to the lowest token id.
    TokenSequence greedy(std::size_t prompt) const;

    TokenSequence sample(std::size_t prompt, std::mt19937_64& rng) const;

    friend bool operator==(const ToyPolicy&, const ToyPolicy&) = default;

private:
    std::size_t num_prompts_ = 0;
    std::size_t horizon_ = 0;
    std::size_t vocab_size_ = 0;
    double temperature_ = 1.0;
    std::vector<double> logits_;
};

/// Exact KL(policy || ref) over the whole response space of one prompt.
/// For a position-factorized policy this is the sum of per-position KLs.
double policy_kl(const ToyPolicy& policy, const ToyPolicy& ref, std::size_t prompt);

/// Uniform double in [0, 1) from the top 53 bits of one generator draw.
double uniform01(std::mt19937_64& rng);

/// Independent stream seed for (seed, a, b), via splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

} // namespace grl
