#include <doctest.h>

#include "kelp/encoder.hpp"
#include "kelp/errors.hpp"
#include "synthetic.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace kelp;

namespace {

// Vectors with prescribed cosines to a unit query: q = e0, v = c*e0 + sqrt(1-c^2)*e1.
std::vector<double> with_cosine(double c) { return {c, std::sqrt(1.0 - c * c), 0.0}; }

std::string random_text(std::mt19937_64& rng, int words) {
    static const char* vocab[] = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta",
                                  "iota", "kappa", "lambda", "mu", "nu", "xi", "omicron", "pi"};
    std::uniform_int_distribution<int> pick(0, 15);
    std::string out;
    for (int i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += vocab[pick(rng)];
    }
    return out;
}

}  // namespace

TEST_CASE("pair_loss hand values") {
    std::vector<double> q{1.0, 0.0, 0.0};
    CHECK(pair_loss(q, with_cosine(0.8), with_cosine(0.3), 0.1) == 0.0);
    CHECK(pair_loss(q, with_cosine(0.4), with_cosine(0.7), 0.1) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(pair_loss(q, with_cosine(0.5), with_cosine(0.5), 0.0) == 0.0);
    CHECK_THROWS_AS(pair_loss(q, std::vector<double>{1.0}, with_cosine(0.5), 0.1), std::invalid_argument);
}

TEST_CASE("gradient is zero when the hinge is inactive") {
    LinearEncoder enc(3, 8);
    // All-zero weights: every cosine is 0, so the hinge is exactly the margin.
    TrainingPair pair{"a b", "a c", "d e"};
    auto grad = loss_gradient(enc, pair, 0.0);
    CHECK(std::all_of(grad.begin(), grad.end(), [](double g) { return g == 0.0; }));
    CHECK(fd_check(enc, pair, 0.0, 1e-5) == 0.0);
}

TEST_CASE("identical positive and negative cancel to a zero gradient") {
    auto enc = LinearEncoder::random(3, 8, 1, 0.5);
    TrainingPair pair{"a b", "c d", "c d"};
    CHECK(pair_loss(enc, pair, 0.3) == doctest::Approx(0.3));
    auto grad = loss_gradient(enc, pair, 0.3);
    CHECK(std::all_of(grad.begin(), grad.end(), [](double g) { return g == 0.0; }));
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(99);
    int checked = 0;
    for (int attempt = 0; attempt < 200 && checked < 20; ++attempt) {
        auto enc = LinearEncoder::random(3, 8, rng(), 1.0);
        TrainingPair pair{random_text(rng, 3), random_text(rng, 3), random_text(rng, 3)};
        if (pair_loss(enc, pair, 0.1) < 1e-3) continue;
        CHECK(fd_check(enc, pair, 0.1, 1e-5) <= 1e-4);
        ++checked;
    }
    CHECK(checked == 20);
}

TEST_CASE("gradient does not depend on the margin while the hinge stays active") {
    std::mt19937_64 rng(3);
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto enc = LinearEncoder::random(4, 16, rng(), 1.0);
        TrainingPair pair{random_text(rng, 2), random_text(rng, 2), random_text(rng, 2)};
        if (pair_loss(enc, pair, 0.0) <= 0.0) continue;
        CHECK(loss_gradient(enc, pair, 0.1) == loss_gradient(enc, pair, 0.3));
        return;
    }
    FAIL("no active instance generated");
}

TEST_CASE("loss is invariant to rescaling the weights") {
    auto pairs = testing::separable_pairs();
    auto enc = LinearEncoder::random(8, 256, 4, 0.1);
    auto doubled = enc;
    for (auto& w : doubled.weights()) w *= 2.0;
    CHECK(std::abs(total_loss(enc, pairs, 0.2) - total_loss(doubled, pairs, 0.2)) < 1e-9);

    TrainConfig one_epoch;
    one_epoch.margin = 0.2;
    one_epoch.epochs = 1;
    auto a = train(enc, pairs, one_epoch);
    auto b = train(doubled, pairs, one_epoch);
    CHECK(std::abs(a.loss_trace[0] - b.loss_trace[0]) < 1e-9);
}

TEST_CASE("separable set: tokens do not collide in the hash space") {
    std::set<std::uint32_t> buckets;
    std::size_t tokens = 0;
    std::set<std::string> seen;
    for (const auto& p : testing::separable_pairs()) {
        for (const auto* text : {&p.question, &p.positive_sentence, &p.negative_sentence}) {
            for (const auto& t : tokenize(*text)) {
                if (seen.insert(t).second) {
                    ++tokens;
                    buckets.insert(static_cast<std::uint32_t>(fnv1a64(t) & (testing::kSeparableHashDim - 1)));
                }
            }
        }
    }
    CHECK(buckets.size() == tokens);
}

TEST_CASE("training converges on the separable set") {
    auto pairs = testing::separable_pairs();
    auto result = train(testing::kSeparableDim, testing::kSeparableHashDim, pairs, testing::separable_config());
    CHECK(result.loss_trace.size() == 200);
    CHECK(result.final_loss < 1e-3);
    CHECK(ranking_accuracy(result.encoder, pairs) == 1.0);
}

TEST_CASE("training is deterministic given the seed") {
    auto pairs = testing::separable_pairs();
    auto config = testing::separable_config();
    config.epochs = 20;
    auto a = train(16, 1024, pairs, config);
    auto b = train(16, 1024, pairs, config);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(std::equal(a.encoder.weights().begin(), a.encoder.weights().end(), b.encoder.weights().begin()));
}

TEST_CASE("zero epochs returns the initialization") {
    auto pairs = testing::separable_pairs();
    auto config = testing::separable_config();
    config.epochs = 0;
    auto init = LinearEncoder::random(16, 1024, config.seed, config.init_scale);
    auto result = train(16, 1024, pairs, config);
    CHECK(result.loss_trace.empty());
    CHECK(std::equal(init.weights().begin(), init.weights().end(), result.encoder.weights().begin()));
}

TEST_CASE("an initially satisfied pair leaves the weights unchanged") {
    // Positive equals the question, negative is disjoint: cos+ = 1, cos- near 0.
    auto bx = fnv1a64("x") & 7, by = fnv1a64("y") & 7;
    REQUIRE(bx != by);
    LinearEncoder enc(2, 8);
    enc.at(0, bx) = 1.0;
    enc.at(1, by) = 1.0;
    TrainingPair pair{"x", "x", "y"};
    REQUIRE(pair_loss(enc, pair, 0.1) == 0.0);
    TrainConfig config;
    config.epochs = 5;
    auto result = train(enc, std::vector<TrainingPair>{pair}, config);
    CHECK(result.loss_trace == std::vector<double>(5, 0.0));
    CHECK(std::equal(enc.weights().begin(), enc.weights().end(), result.encoder.weights().begin()));
}

TEST_CASE("train rejects empty input") {
    CHECK_THROWS_AS(train(4, 16, std::vector<TrainingPair>{}, TrainConfig{}), std::invalid_argument);
}

TEST_CASE("non-finite loss aborts training") {
    auto pairs = testing::separable_pairs(2);
    auto config = testing::separable_config();
    config.learning_rate = 1e308;
    config.margin = 3.0;  // hinge can never switch off
    config.epochs = 50;
    CHECK_THROWS_AS(train(4, 64, pairs, config), TrainingError);
}

TEST_CASE("encoder weights file round trip") {
    auto enc = LinearEncoder::random(3, 16, 42, 0.7);
    std::stringstream buffer;
    save_encoder(enc, buffer);
    std::string header;
    std::getline(std::istringstream(buffer.str()), header);
    CHECK(header == "KELP-ENC 1 3 16");
    auto back = load_encoder(buffer);
    CHECK(back.dimension() == 3);
    CHECK(back.hash_dim() == 16);
    CHECK(std::equal(enc.weights().begin(), enc.weights().end(), back.weights().begin()));
}

TEST_CASE("malformed weights files are rejected") {
    std::istringstream bad_magic("NOPE 1 1 2\n0 0\n");
    CHECK_THROWS_AS(load_encoder(bad_magic), InputError);
    std::istringstream bad_version("KELP-ENC 2 1 2\n0 0\n");
    CHECK_THROWS_AS(load_encoder(bad_version), InputError);
    std::istringstream short_row("KELP-ENC 1 1 2\n0\n");
    CHECK_THROWS_AS(load_encoder(short_row), InputError);
    std::istringstream missing_row("KELP-ENC 1 2 2\n0 0\n");
    CHECK_THROWS_AS(load_encoder(missing_row), InputError);
}

TEST_CASE("ranking rate is invariant to increasing transforms of the scores") {
    auto pairs = testing::separable_pairs();
    auto enc = LinearEncoder::random(8, 256, 9, 0.3);
    std::vector<std::pair<double, double>> scores;
    for (const auto& p : pairs) {
        std::vector<std::string> texts{p.question, p.positive_sentence, p.negative_sentence};
        auto h = enc.embed_batch(texts);
        scores.emplace_back(cosine(h[0], h[1]), cosine(h[0], h[2]));
    }
    auto rate = [&](auto f) {
        std::size_t wins = 0;
        for (auto [pos, neg] : scores) wins += f(pos) > f(neg);
        return static_cast<double>(wins) / static_cast<double>(scores.size());
    };
    double base = rate([](double x) { return x; });
    CHECK(base == ranking_accuracy(enc, pairs));
    CHECK(rate([](double x) { return 2.0 * x + 0.1; }) == base);
    CHECK(rate([](double x) { return std::tanh(3.0 * x); }) == base);
    CHECK(rate([](double x) { return std::exp(x); }) == base);
}
