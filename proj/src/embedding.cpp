#include "kelp/embedding.hpp"

#include "kelp/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace kelp {

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                                    std::to_string(v.size()) + ")");
    }
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) return 0.0;
    double c = dot / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(c, -1.0, 1.0);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
        if (word) {
            current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<double> SparseFeatures::dense() const {
    std::vector<double> out(dim, 0.0);
    for (const auto& [index, count] : entries) out[index] = count;
    return out;
}

SparseFeatures hashed_features(std::string_view text, std::size_t hash_dim) {
    if (hash_dim < 2 || (hash_dim & (hash_dim - 1)) != 0) {
        throw std::invalid_argument("hash_dim must be a power of two >= 2");
    }
    std::map<std::uint32_t, double> counts;
    for (const auto& token : tokenize(text)) {
        counts[static_cast<std::uint32_t>(fnv1a64(token) & (hash_dim - 1))] += 1.0;
    }
    SparseFeatures out;
    out.dim = hash_dim;
    out.entries.assign(counts.begin(), counts.end());
    return out;
}

HashedBagProvider::HashedBagProvider(std::size_t hash_dim) : hash_dim_(hash_dim) {
    hashed_features("", hash_dim_);  // validates hash_dim
}

std::vector<EmbeddingVector> HashedBagProvider::embed_batch(std::span<const std::string> texts) const {
    if (texts.empty()) throw std::invalid_argument("embed_batch: empty input");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(hashed_features(text, hash_dim_).dense());
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

RandomProvider::RandomProvider(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("RandomProvider: dim must be positive");
}

std::vector<EmbeddingVector> RandomProvider::embed_batch(std::span<const std::string> texts) const {
    if (texts.empty()) throw std::invalid_argument("embed_batch: empty input");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::uint64_t state = fnv1a64(text) ^ (seed_ * 0x9E3779B97F4A7C15ULL);
        EmbeddingVector v(dim_);
        for (auto& x : v) x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
        out.push_back(std::move(v));
    }
    return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string base_url, std::string token_env,
                                                 int timeout_seconds)
    : base_url_(std::move(base_url)), token_env_(std::move(token_env)), timeout_seconds_(timeout_seconds) {}

std::size_t RemoteEmbeddingProvider::dimension() const {
    std::lock_guard lock(mutex_);
    return dim_.value_or(0);
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed_batch(std::span<const std::string> texts) const {
    if (texts.empty()) throw std::invalid_argument("embed_batch: empty input");
    std::lock_guard lock(mutex_);

    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    if (!token_env_.empty()) {
        if (const char* token = std::getenv(token_env_.c_str()); token && *token) {
            client.set_bearer_token_auth(token);
        }
    }

    nlohmann::json body;
    body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
    auto res = client.Post("/embed", body.dump(), "application/json");
    if (!res) {
        throw ProviderError("embedding provider unreachable at " + base_url_ + ": " + httplib::to_string(res.error()));
    }
    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (res->status != 200) {
        std::string message = "HTTP " + std::to_string(res->status);
        if (reply.is_object() && reply.contains("error") && reply["error"].is_string()) {
            message += ": " + reply["error"].get<std::string>();
        }
        throw ProviderError("embedding provider error: " + message);
    }
    if (!reply.is_object() || !reply.contains("vectors") || !reply["vectors"].is_array()) {
        throw ProviderError("embedding provider returned malformed body");
    }
    const auto& vectors = reply["vectors"];
    if (vectors.size() != texts.size()) {
        throw ProviderError("embedding provider returned " + std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) {
        if (!v.is_array()) throw ProviderError("embedding provider returned a non-array vector");
        EmbeddingVector vec;
        vec.reserve(v.size());
        for (const auto& x : v) {
            if (!x.is_number()) throw ProviderError("embedding provider returned a non-numeric entry");
            double d = x.get<double>();
            if (!std::isfinite(d)) throw ProviderError("embedding provider returned a non-finite entry");
            vec.push_back(d);
        }
        if (!dim_) {
            if (vec.empty()) throw ProviderError("embedding provider returned an empty vector");
            dim_ = vec.size();
        } else if (vec.size() != *dim_) {
            throw ProviderError("embedding provider dimension changed from " + std::to_string(*dim_) + " to " +
                                std::to_string(vec.size()));
        }
        out.push_back(std::move(vec));
    }
    return out;
}

EmbeddingVector embed_one(const EmbeddingProvider& provider, const std::string& text) {
    return std::move(provider.embed_batch(std::span<const std::string>(&text, 1)).front());
}

}  // namespace kelp
