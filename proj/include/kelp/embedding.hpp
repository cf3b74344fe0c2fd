#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kelp {

using EmbeddingVector = std::vector<double>;

/// Text encoder contract. Implementations are deterministic: equal text maps
/// to an equal vector for the lifetime of one instance.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// One vector per input text. `texts` must be non-empty.
    /// Transport failures are reported as ProviderError.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const = 0;

    /// Output dimension. Remote providers report 0 until the first response.
    virtual std::size_t dimension() const = 0;

    /// Whether concurrent embed_batch calls are allowed.
    virtual bool concurrent() const { return true; }
};

/// Cosine similarity; 0 if either vector has zero norm.
/// Throws std::invalid_argument on dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercased alphanumeric tokens. Bytes >= 0x80 are kept as token bytes so
/// UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view text);

/// Sparse bucket counts, sorted by bucket index.
struct SparseFeatures {
    std::size_t dim = 0;
    std::vector<std::pair<std::uint32_t, double>> entries;

    std::vector<double> dense() const;
};

/// Bag of FNV-1a hashed tokens. `hash_dim` must be a power of two >= 2.
SparseFeatures hashed_features(std::string_view text, std::size_t hash_dim);

/// Parameter-free provider: the dense hashed-feature vector itself.
class HashedBagProvider : public EmbeddingProvider {
public:
    explicit HashedBagProvider(std::size_t hash_dim = 1024);

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;
    std::size_t dimension() const override { return hash_dim_; }

private:
    std::size_t hash_dim_;
};

/// Pseudo-random unit-free vectors seeded by (seed, text). Useful as a
/// no-ranking baseline: scores carry no information about the question.
class RandomProvider : public EmbeddingProvider {
public:
    RandomProvider(std::uint64_t seed, std::size_t dim = 64);

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;
    std::size_t dimension() const override { return dim_; }

private:
    std::uint64_t seed_;
    std::size_t dim_;
};

/// Client for the embedding wire protocol:
///   POST /embed {"texts": [...]} -> {"vectors": [[...], ...]}
/// The dimension is pinned by the first successful response. Calls are
/// serialized internally.
class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
    /// `base_url` like "http://127.0.0.1:8080". If `token_env` names a set
    /// environment variable, its value is sent as a bearer token.
    explicit RemoteEmbeddingProvider(std::string base_url, std::string token_env = "KELP_PROVIDER_TOKEN",
                                     int timeout_seconds = 30);

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;
    std::size_t dimension() const override;
    bool concurrent() const override { return false; }

private:
    std::string base_url_;
    std::string token_env_;
    int timeout_seconds_;
    mutable std::mutex mutex_;
    mutable std::optional<std::size_t> dim_;
};

/// Convenience: embed a single text.
EmbeddingVector embed_one(const EmbeddingProvider& provider, const std::string& text);

}  // namespace kelp
