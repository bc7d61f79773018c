#include "grl/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "grl/error.hpp"
#include "grl/format_parser.hpp"
#include "grl/text_metrics.hpp"

namespace grl {
namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

double EmbeddingVector::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

EmbeddingVector hash_embed(std::string_view text, std::size_t dim) {
    if (dim < 8) throw Error(ErrorCode::InvalidArgument, "hash embedding dimension must be >= 8");
    EmbeddingVector e{std::vector<double>(dim, 0.0)};
    for (const auto& tok : tokenize(text).tokens) {
        const std::uint64_t h = fnv1a(tok);
        const std::size_t idx = static_cast<std::size_t>(h % dim);
        e.values[idx] += (mix64(h) >> 63) ? -1.0 : 1.0;
    }
    const double n = e.norm();
    if (n > 0.0) {
        for (double& v : e.values) v /= n;
    }
    return e;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim) : dim_(dim) {
    if (dim < 8) throw Error(ErrorCode::InvalidArgument, "hash embedding dimension must be >= 8");
}

std::vector<EmbeddingVector> HashEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(hash_embed(t, dim_));
    return out;
}

std::string HashEmbeddingProvider::name() const { return "hash-" + std::to_string(dim_); }

struct RemoteEmbeddingProvider::Client {
    explicit Client(const RemoteEmbeddingOptions& o) : http(o.endpoint) {
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(o.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(o.timeout - secs);
        http.set_connection_timeout(secs.count(), usecs.count());
        http.set_read_timeout(secs.count(), usecs.count());
        http.set_write_timeout(secs.count(), usecs.count());
    }
    httplib::Client http;
};

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingOptions opts)
    : opts_(std::move(opts)) {
    if (opts_.endpoint.empty()) {
        throw Error(ErrorCode::InvalidArgument, "embedding endpoint is empty");
    }
    client_ = std::make_unique<Client>(opts_);
    if (!client_->http.is_valid()) {
        throw Error(ErrorCode::InvalidArgument, "invalid embedding endpoint '" + opts_.endpoint + "'");
    }
}

RemoteEmbeddingProvider::~RemoteEmbeddingProvider() = default;

std::string RemoteEmbeddingProvider::name() const { return "remote:" + opts_.endpoint; }

std::vector<EmbeddingVector> RemoteEmbeddingProvider::request(std::span<const std::string> texts) {
    nlohmann::json body;
    body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
    const std::string payload = body.dump();

    std::string last_error;
    auto backoff = opts_.initial_backoff;
    for (int attempt = 0; attempt <= opts_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client_->http.Post("/embed", payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw Error(ErrorCode::EmbeddingServiceUnavailable,
                        "embedding service rejected request with HTTP " + std::to_string(res->status));
        }

        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.is_object() || !reply.contains("vectors") ||
            !reply["vectors"].is_array()) {
            throw Error(ErrorCode::DimensionMismatch, "embedding reply has no 'vectors' array");
        }
        const auto& vectors = reply["vectors"];
        if (vectors.size() != texts.size()) {
            throw Error(ErrorCode::DimensionMismatch,
                        "expected " + std::to_string(texts.size()) + " vectors, got " +
                            std::to_string(vectors.size()));
        }
        std::vector<EmbeddingVector> out;
        out.reserve(vectors.size());
        std::optional<std::size_t> dim = dim_;
        for (const auto& v : vectors) {
            if (!v.is_array() || v.empty()) {
                throw Error(ErrorCode::DimensionMismatch, "embedding vector is empty or not an array");
            }
            if (dim && v.size() != *dim) {
                throw Error(ErrorCode::DimensionMismatch,
                            "ragged embedding reply: dimension " + std::to_string(v.size()) +
                                " vs " + std::to_string(*dim));
            }
            dim = v.size();
            EmbeddingVector e;
            e.values.reserve(v.size());
            for (const auto& x : v) {
                if (!x.is_number() || !std::isfinite(x.get<double>())) {
                    throw Error(ErrorCode::DimensionMismatch, "embedding entry is not a finite number");
                }
                e.values.push_back(x.get<double>());
            }
            out.push_back(std::move(e));
        }
        if (dim) dim_ = dim;
        return out;
    }
    throw Error(ErrorCode::EmbeddingServiceUnavailable,
                "embedding service at " + opts_.endpoint + " unavailable after " +
                    std::to_string(opts_.max_retries + 1) + " attempts: " + last_error);
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
    std::lock_guard lock(mu_);
    std::vector<std::string> missing;
    for (const auto& t : texts) {
        if (!memo_.count(t) && std::find(missing.begin(), missing.end(), t) == missing.end()) {
            missing.push_back(t);
        }
    }
    if (!missing.empty()) {
        auto fetched = request(missing);
        for (std::size_t i = 0; i < missing.size(); ++i) memo_.emplace(missing[i], std::move(fetched[i]));
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(memo_.at(t));
    return out;
}

std::size_t RemoteEmbeddingProvider::dimension() {
    {
        std::lock_guard lock(mu_);
        if (dim_) return *dim_;
    }
    const std::string probe = "dimension probe";
    embed_batch(std::span<const std::string>(&probe, 1));
    std::lock_guard lock(mu_);
    return dim_.value_or(0);
}

std::vector<EmbeddingVector> remote_embed_batch(const RemoteEmbeddingOptions& opts,
                                                std::span<const std::string> texts) {
    RemoteEmbeddingProvider provider(opts);
    return provider.embed_batch(texts);
}

std::optional<std::string> embed_endpoint_from_env() {
    const char* v = std::getenv("GRL_EMBED_ENDPOINT");
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

double rectified_cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with different dimensions");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    if (a == b) return 1.0;
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, 0.0, 1.0);
}

double sbert_reward(const std::string& cand, const std::string& gt, EmbeddingProvider& provider) {
    const std::string texts[2] = {cand, gt};
    const auto e = provider.embed_batch(texts);
    if (e.size() != 2) throw Error(ErrorCode::DimensionMismatch, "provider returned wrong vector count");
    if (e[0].norm() == 0.0 || e[1].norm() == 0.0) {
        return trim(cand) == trim(gt) ? 1.0 : 0.0;
    }
    return rectified_cosine(e[0], e[1]);
}

} // namespace grl
