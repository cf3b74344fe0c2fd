#pragma once

#include "kelp/embedding.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kelp {

/// embed(text) = W * hashed_features(text, H), with W a dim x hash_dim matrix
/// stored row-major.
class LinearEncoder : public EmbeddingProvider {
public:
    LinearEncoder(std::size_t dim, std::size_t hash_dim);
    LinearEncoder(std::size_t dim, std::size_t hash_dim, std::vector<double> weights);

    /// Entries uniform in [-scale, scale] from a seeded generator.
    static LinearEncoder random(std::size_t dim, std::size_t hash_dim, std::uint64_t seed, double scale);

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;
    std::size_t dimension() const override { return dim_; }

    EmbeddingVector embed(const SparseFeatures& x) const;

    std::size_t hash_dim() const { return hash_dim_; }
    std::span<const double> weights() const { return weights_; }
    std::span<double> weights() { return weights_; }
    double& at(std::size_t row, std::size_t col) { return weights_[row * hash_dim_ + col]; }
    double at(std::size_t row, std::size_t col) const { return weights_[row * hash_dim_ + col]; }

private:
    std::size_t dim_;
    std::size_t hash_dim_;
    std::vector<double> weights_;
};

struct TrainingPair {
    std::string question;
    std::string positive_sentence;
    std::string negative_sentence;
};

struct TrainConfig {
    double margin = 0.1;
    double learning_rate = 0.1;
    int epochs = 100;
    std::uint64_t seed = 0;
    double init_scale = 0.1;
};

/// Per-sample pairwise margin loss: max(cos(q, neg) - cos(q, pos) + margin, 0).
double pair_loss(std::span<const double> h_q, std::span<const double> h_pos, std::span<const double> h_neg,
                 double margin);

/// Loss of one pair under `encoder`.
double pair_loss(const LinearEncoder& encoder, const TrainingPair& pair, double margin);

/// Sum of pair losses.
double total_loss(const LinearEncoder& encoder, std::span<const TrainingPair> pairs, double margin);

/// Gradient of the pair loss w.r.t. the weights, same layout as
/// LinearEncoder::weights(). Zero when the hinge is inactive (including the
/// kink).
std::vector<double> loss_gradient(const LinearEncoder& encoder, const TrainingPair& pair, double margin);

struct TrainResult {
    LinearEncoder encoder;
    std::vector<double> loss_trace;  // total loss before each epoch's update
    double final_loss = 0.0;         // total loss after the last update
};

/// Full-batch gradient descent starting from `initial`. Throws TrainingError
/// on a non-finite loss and std::invalid_argument on an empty pair list.
TrainResult train(LinearEncoder initial, std::span<const TrainingPair> pairs, const TrainConfig& config);

/// Same, starting from LinearEncoder::random(dim, hash_dim, config.seed, config.init_scale).
TrainResult train(std::size_t dim, std::size_t hash_dim, std::span<const TrainingPair> pairs,
                  const TrainConfig& config);

/// Largest relative error between loss_gradient and central differences,
/// over entries where either side is nonzero. Entries with both sides
/// below 1e-12 in magnitude are skipped.
double fd_check(const LinearEncoder& encoder, const TrainingPair& pair, double margin, double step);

/// Fraction of pairs with cos(q, pos) > cos(q, neg).
double ranking_accuracy(const EmbeddingProvider& provider, std::span<const TrainingPair> pairs);

/// Text format: "KELP-ENC 1 <dim> <hash_dim>" then one row of weights per line.
/// The loader skips leading "#" comment lines.
void save_encoder(const LinearEncoder& encoder, std::ostream& out);
void save_encoder(const LinearEncoder& encoder, const std::filesystem::path& path);
LinearEncoder load_encoder(std::istream& in);
LinearEncoder load_encoder(const std::filesystem::path& path);

}  // namespace kelp
