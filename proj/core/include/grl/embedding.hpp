#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace grl {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    double norm() const;
    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Sentence-embedding backend. Implementations must return identical vectors
/// for identical strings and tolerate concurrent embed_batch() calls.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) = 0;
    virtual std::size_t dimension() = 0;
    virtual std::string name() const = 0;
};

/// Signed feature hashing over tokenize(text), L2-normalized. Empty or
/// token-free text maps to the zero vector.
EmbeddingVector hash_embed(std::string_view text, std::size_t dim);

class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDimension = 512;

    /// Throws InvalidArgument for dim < 8.
    explicit HashEmbeddingProvider(std::size_t dim = kDefaultDimension);

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;
    std::size_t dimension() override { return dim_; }
    std::string name() const override;

private:
    std::size_t dim_;
};

struct RemoteEmbeddingOptions {
    /// e.g. "http://127.0.0.1:8080"; requests go to <endpoint>/embed.
    std::string endpoint;
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{50};
    std::chrono::milliseconds timeout{5000};
};

/// Client for POST /embed {"texts": [...]} -> {"vectors": [[...], ...]}.
/// Transport failures and 5xx replies are retried with doubling backoff;
/// afterwards EmbeddingServiceUnavailable is thrown. Ragged or miscounted
/// replies throw DimensionMismatch. Vectors are memoized per text.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(RemoteEmbeddingOptions opts);
    ~RemoteEmbeddingProvider() override;

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;
    /// Probes the service with a one-text request if no call has fixed it yet.
    std::size_t dimension() override;
    std::string name() const override;

private:
    struct Client;

    std::vector<EmbeddingVector> request(std::span<const std::string> texts);

    RemoteEmbeddingOptions opts_;
    std::unique_ptr<Client> client_;
    std::mutex mu_;
    std::optional<std::size_t> dim_;
    std::map<std::string, EmbeddingVector> memo_;
};

/// Batch helper matching the free-function surface of the remote path.
std::vector<EmbeddingVector> remote_embed_batch(const RemoteEmbeddingOptions& opts,
                                                std::span<const std::string> texts);

/// Endpoint from GRL_EMBED_ENDPOINT, if set and non-empty.
std::optional<std::string> embed_endpoint_from_env();

/// max(0, cos(e_cand, e_gt)) clamped to [0, 1]. When either embedding has
/// zero norm the result is 1.0 if both texts are identical after trimming
/// (covers the both-empty case) and 0.0 otherwise.
double sbert_reward(const std::string& cand, const std::string& gt, EmbeddingProvider& provider);

/// Rectified cosine of two vectors; 0.0 if either is zero. Throws
/// DimensionMismatch when the sizes differ.
double rectified_cosine(const EmbeddingVector& a, const EmbeddingVector& b);

} // namespace grl
