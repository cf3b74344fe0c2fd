#include "kelp/encoder.hpp"

#include "kelp/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace kelp {

LinearEncoder::LinearEncoder(std::size_t dim, std::size_t hash_dim)
    : LinearEncoder(dim, hash_dim, std::vector<double>(dim * hash_dim, 0.0)) {}

LinearEncoder::LinearEncoder(std::size_t dim, std::size_t hash_dim, std::vector<double> weights)
    : dim_(dim), hash_dim_(hash_dim), weights_(std::move(weights)) {
    if (dim_ == 0) throw std::invalid_argument("LinearEncoder: dim must be positive");
    hashed_features("", hash_dim_);  // validates hash_dim
    if (weights_.size() != dim_ * hash_dim_) throw std::invalid_argument("LinearEncoder: weight count mismatch");
    for (double w : weights_) {
        if (!std::isfinite(w)) throw std::invalid_argument("LinearEncoder: non-finite weight");
    }
}

LinearEncoder LinearEncoder::random(std::size_t dim, std::size_t hash_dim, std::uint64_t seed, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("init scale must be positive");
    std::mt19937_64 gen(seed);
    std::vector<double> w(dim * hash_dim);
    for (auto& x : w) {
        double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
        x = scale * (2.0 * u - 1.0);
    }
    return LinearEncoder(dim, hash_dim, std::move(w));
}

EmbeddingVector LinearEncoder::embed(const SparseFeatures& x) const {
    EmbeddingVector out(dim_, 0.0);
    for (std::size_t row = 0; row < dim_; ++row) {
        const double* w = weights_.data() + row * hash_dim_;
        double acc = 0.0;
        for (const auto& [col, count] : x.entries) acc += w[col] * count;
        out[row] = acc;
    }
    return out;
}

std::vector<EmbeddingVector> LinearEncoder::embed_batch(std::span<const std::string> texts) const {
    if (texts.empty()) throw std::invalid_argument("embed_batch: empty input");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(embed(hashed_features(text, hash_dim_)));
    return out;
}

double pair_loss(std::span<const double> h_q, std::span<const double> h_pos, std::span<const double> h_neg,
                 double margin) {
    double hinge = cosine(h_q, h_neg) - cosine(h_q, h_pos) + margin;
    return hinge > 0.0 ? hinge : 0.0;
}

double pair_loss(const LinearEncoder& encoder, const TrainingPair& pair, double margin) {
    auto hq = encoder.embed(hashed_features(pair.question, encoder.hash_dim()));
    auto hp = encoder.embed(hashed_features(pair.positive_sentence, encoder.hash_dim()));
    auto hn = encoder.embed(hashed_features(pair.negative_sentence, encoder.hash_dim()));
    return pair_loss(hq, hp, hn, margin);
}

double total_loss(const LinearEncoder& encoder, std::span<const TrainingPair> pairs, double margin) {
    double sum = 0.0;
    for (const auto& pair : pairs) sum += pair_loss(encoder, pair, margin);
    return sum;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// d cos(a, b) / d a; zero when either norm vanishes (cosine is constant 0 there).
std::vector<double> cosine_grad(std::span<const double> a, std::span<const double> b) {
    std::vector<double> g(a.size(), 0.0);
    double na = std::sqrt(dot(a, a));
    double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return g;
    double c = dot(a, b) / (na * nb);
    for (std::size_t i = 0; i < a.size(); ++i) g[i] = b[i] / (na * nb) - c * a[i] / (na * na);
    return g;
}

void add_outer(std::vector<double>& grad, std::size_t hash_dim, std::span<const double> g,
               const SparseFeatures& x) {
    for (std::size_t row = 0; row < g.size(); ++row) {
        double* out = grad.data() + row * hash_dim;
        for (const auto& [col, count] : x.entries) out[col] += g[row] * count;
    }
}

// Accumulates the pair's gradient into `grad` and returns its loss.
double accumulate_pair(const LinearEncoder& encoder, const TrainingPair& pair, double margin,
                       std::vector<double>& grad) {
    auto xq = hashed_features(pair.question, encoder.hash_dim());
    auto xp = hashed_features(pair.positive_sentence, encoder.hash_dim());
    auto xn = hashed_features(pair.negative_sentence, encoder.hash_dim());
    auto hq = encoder.embed(xq);
    auto hp = encoder.embed(xp);
    auto hn = encoder.embed(xn);

    double hinge = cosine(hq, hn) - cosine(hq, hp) + margin;
    if (!(hinge > 0.0)) return std::isnan(hinge) ? hinge : 0.0;

    auto dq_neg = cosine_grad(hq, hn);
    auto dq_pos = cosine_grad(hq, hp);
    std::vector<double> gq(hq.size());
    for (std::size_t i = 0; i < gq.size(); ++i) gq[i] = dq_neg[i] - dq_pos[i];
    auto gn = cosine_grad(hn, hq);
    auto gp = cosine_grad(hp, hq);
    for (auto& v : gp) v = -v;

    add_outer(grad, encoder.hash_dim(), gq, xq);
    add_outer(grad, encoder.hash_dim(), gn, xn);
    add_outer(grad, encoder.hash_dim(), gp, xp);
    return hinge;
}

}  // namespace

std::vector<double> loss_gradient(const LinearEncoder& encoder, const TrainingPair& pair, double margin) {
    std::vector<double> grad(encoder.weights().size(), 0.0);
    accumulate_pair(encoder, pair, margin, grad);
    return grad;
}

TrainResult train(LinearEncoder initial, std::span<const TrainingPair> pairs, const TrainConfig& config) {
    if (pairs.empty()) throw std::invalid_argument("train: no training pairs");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
    if (config.epochs < 0) throw std::invalid_argument("train: epochs must be non-negative");
    if (!(config.margin >= 0.0)) throw std::invalid_argument("train: margin must be non-negative");

    TrainResult result{std::move(initial), {}, 0.0};
    auto& encoder = result.encoder;
    std::vector<double> grad(encoder.weights().size());

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (const auto& pair : pairs) loss += accumulate_pair(encoder, pair, config.margin, grad);
        if (!std::isfinite(loss)) {
            throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
        }
        result.loss_trace.push_back(loss);
        auto w = encoder.weights();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * grad[i];
    }
    for (double w : encoder.weights()) {
        if (!std::isfinite(w)) throw TrainingError("non-finite weight after training");
    }
    result.final_loss = total_loss(encoder, pairs, config.margin);
    if (!std::isfinite(result.final_loss)) throw TrainingError("non-finite final loss");
    return result;
}

TrainResult train(std::size_t dim, std::size_t hash_dim, std::span<const TrainingPair> pairs,
                  const TrainConfig& config) {
    return train(LinearEncoder::random(dim, hash_dim, config.seed, config.init_scale), pairs, config);
}

double fd_check(const LinearEncoder& encoder, const TrainingPair& pair, double margin, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("fd_check: step must be positive");
    auto analytic = loss_gradient(encoder, pair, margin);
    LinearEncoder probe = encoder;
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        double original = probe.weights()[i];
        probe.weights()[i] = original + step;
        double up = pair_loss(probe, pair, margin);
        probe.weights()[i] = original - step;
        double down = pair_loss(probe, pair, margin);
        probe.weights()[i] = original;
        double numeric = (up - down) / (2.0 * step);

        double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
        if (scale < 1e-12) continue;
        worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(scale, 1e-8));
    }
    return worst;
}

double ranking_accuracy(const EmbeddingProvider& provider, std::span<const TrainingPair> pairs) {
    if (pairs.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& pair : pairs) {
        std::vector<std::string> texts{pair.question, pair.positive_sentence, pair.negative_sentence};
        auto h = provider.embed_batch(texts);
        if (cosine(h[0], h[1]) > cosine(h[0], h[2])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

void save_encoder(const LinearEncoder& encoder, std::ostream& out) {
    out << "KELP-ENC 1 " << encoder.dimension() << ' ' << encoder.hash_dim() << '\n';
    char buf[32];
    for (std::size_t row = 0; row < encoder.dimension(); ++row) {
        for (std::size_t col = 0; col < encoder.hash_dim(); ++col) {
            if (col) out << ' ';
            std::snprintf(buf, sizeof buf, "%.17g", encoder.at(row, col));
            out << buf;
        }
        out << '\n';
    }
}

void save_encoder(const LinearEncoder& encoder, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write encoder file: " + path.string());
    save_encoder(encoder, out);
    if (!out) throw InputError("failed writing encoder file: " + path.string());
}

LinearEncoder load_encoder(std::istream& in) {
    std::string header;
    do {
        if (!std::getline(in, header)) throw InputError("encoder file: missing header");
    } while (header.starts_with('#'));
    std::istringstream hs(header);
    std::string magic;
    int version = 0;
    std::size_t dim = 0, hash_dim = 0;
    if (!(hs >> magic >> version >> dim >> hash_dim) || magic != "KELP-ENC") {
        throw InputError("encoder file: bad header \"" + header + "\"");
    }
    if (version != 1) throw InputError("encoder file: unsupported version " + std::to_string(version));
    if (dim == 0 || hash_dim < 2 || (hash_dim & (hash_dim - 1)) != 0) {
        throw InputError("encoder file: invalid dimensions");
    }

    std::vector<double> weights;
    weights.reserve(dim * hash_dim);
    std::string line;
    for (std::size_t row = 0; row < dim; ++row) {
        if (!std::getline(in, line)) throw InputError("encoder file: missing row " + std::to_string(row));
        const char* p = line.data();
        const char* end = line.data() + line.size();
        std::size_t count = 0;
        while (p < end) {
            while (p < end && *p == ' ') ++p;
            if (p >= end) break;
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc() || !std::isfinite(v)) {
                throw InputError("encoder file: bad number in row " + std::to_string(row));
            }
            weights.push_back(v);
            ++count;
            p = next;
        }
        if (count != hash_dim) {
            throw InputError("encoder file: row " + std::to_string(row) + " has " + std::to_string(count) +
                             " values, expected " + std::to_string(hash_dim));
        }
    }
    return LinearEncoder(dim, hash_dim, std::move(weights));
}

LinearEncoder load_encoder(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open encoder file: " + path.string());
    return load_encoder(in);
}

}  // namespace kelp
