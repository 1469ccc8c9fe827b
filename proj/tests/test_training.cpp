#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gradcheck.hpp"
#include "longmatch/errors.hpp"
#include "longmatch/training.hpp"

using namespace longmatch;

namespace {

ModelConfig grad_config(std::size_t layers, double alpha) {
    ModelConfig c;
    c.layers = layers;
    c.heads = 1;
    c.width = 4;
    c.ff_width = 6;
    c.max_len = 8;
    c.vocab_size = 10;
    c.alpha = alpha;
    return c;
}

std::vector<PreparedExample> toy_set(std::size_t n, std::uint64_t seed, const ModelConfig& cfg) {
    std::mt19937_64 rng(seed);
    std::vector<PreparedExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        PreparedExample ex;
        ex.seq = gradcheck::random_sequence(7, cfg.vocab_size, rng);
        // Label 1 iff token 4 appears: learnable from the embeddings.
        ex.label = std::find(ex.seq.ids.begin(), ex.seq.ids.end(), 4) != ex.seq.ids.end() ? 1 : 0;
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace

TEST_CASE("binary cross-entropy") {
    CHECK(bce_loss(0.5, 1) == doctest::Approx(0.6931).epsilon(1e-4));
    CHECK(bce_loss(1.0 - 1e-12, 1) < 1e-6);
    CHECK(bce_loss(0.0, 1) == doctest::Approx(-std::log(kProbClamp)));
    const std::vector<std::pair<double, int>> batch{{0.9, 1}, {0.2, 0}};
    CHECK(bce_loss(batch) == doctest::Approx(0.1643).epsilon(1e-4));
}

TEST_CASE("analytic gradients match finite differences") {
    const auto cfg = grad_config(1, 0.1);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        const auto seq = gradcheck::random_sequence(5, cfg.vocab_size, rng);
        const auto w = gradcheck::random_weights(cfg, rng);
        const auto r = gradcheck::check(seq, w, cfg, static_cast<int>(seed % 2));
        INFO("seed " << seed << " worst " << r.worst_tensor);
        CHECK(r.max_rel_error < 1e-4);
        CHECK(r.compared > 0);
    }
}

TEST_CASE("gradients with active pruning") {
    const auto cfg = grad_config(2, 0.25);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed + 50);
        const auto seq = gradcheck::random_sequence(8, cfg.vocab_size, rng);
        const auto w = gradcheck::random_weights(cfg, rng);
        REQUIRE(forward(seq, w, cfg).active.positions[1].size() == 6);
        const auto r = gradcheck::check(seq, w, cfg, static_cast<int>(seed % 2));
        INFO("seed " << seed << " worst " << r.worst_tensor);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("adam first step moves each weight by about the learning rate") {
    const auto cfg = grad_config(1, 0.0);
    TrainConfig tc;
    tc.learning_rate = 1e-2;
    auto w = ModelWeights::initialize(cfg);
    const auto before = w;
    auto g = ModelWeights::zeros(cfg);
    g.classifier.setConstant(0.3);
    g.classifier(0, 1) = -2.0;
    Adam opt(cfg, tc);
    opt.step(w, g);
    CHECK(opt.steps() == 1);
    CHECK(w.classifier(0, 0) - before.classifier(0, 0) == doctest::Approx(-1e-2).epsilon(1e-4));
    CHECK(w.classifier(0, 1) - before.classifier(0, 1) == doctest::Approx(1e-2).epsilon(1e-4));
    CHECK(w.token_embedding == before.token_embedding);
}

TEST_CASE("single example is memorized") {
    auto cfg = grad_config(1, 0.0);
    cfg.width = 8;
    cfg.heads = 2;
    TrainConfig tc;
    tc.learning_rate = 1e-2;
    tc.epochs = 50;
    tc.batch_size = 1;
    const auto one = toy_set(1, 3, cfg);
    const auto r = train(one, {}, cfg, tc);
    CHECK(r.epochs.back().train_loss < 0.01);
}

TEST_CASE("training is deterministic and reduces the loss") {
    auto cfg = grad_config(2, 0.25);
    cfg.width = 8;
    cfg.heads = 2;
    TrainConfig tc;
    tc.learning_rate = 5e-3;
    tc.epochs = 15;
    tc.batch_size = 4;
    const auto data = toy_set(40, 9, cfg);
    const auto r1 = train(data, data, cfg, tc);
    const auto r2 = train(data, data, cfg, tc);
    CHECK(r1.epochs[0].train_loss == r2.epochs[0].train_loss);
    CHECK(r1.epochs.back().train_loss == r2.epochs.back().train_loss);
    CHECK(r1.epochs.back().train_loss < r1.epochs.front().train_loss);
    CHECK(r1.best_epoch >= 1);

    tc.seed = 2;
    const auto r3 = train(data, data, cfg, tc);
    CHECK(r3.epochs[0].train_loss != r1.epochs[0].train_loss);
}

TEST_CASE("training errors") {
    const auto cfg = grad_config(1, 0.0);
    TrainConfig tc;
    CHECK_THROWS_AS(train({}, {}, cfg, tc), InputError);
    tc.batch_size = 0;
    CHECK_THROWS_AS(tc.validate(), ConfigError);

    TrainConfig ok;
    TrainOptions opts;
    auto w = ModelWeights::initialize(cfg);
    w.classifier(0, 0) = std::numeric_limits<double>::quiet_NaN();
    opts.initial_weights = w;
    CHECK_THROWS_AS(train(toy_set(4, 1, cfg), {}, cfg, ok, opts), InternalError);
}

TEST_CASE("batched gradients are the mean of per-example gradients") {
    const auto cfg = grad_config(1, 0.0);
    const auto data = toy_set(3, 4, cfg);
    const auto w = ModelWeights::initialize(cfg);
    std::vector<const PreparedExample*> batch{&data[0], &data[1], &data[2]};
    auto g_all = ModelWeights::zeros(cfg);
    const double loss = accumulate_batch_gradients(batch, w, cfg, {}, g_all);
    auto g_sum = ModelWeights::zeros(cfg);
    double loss_sum = 0.0;
    for (const auto* ex : batch) {
        const PreparedExample* one[] = {ex};
        loss_sum += accumulate_batch_gradients(one, w, cfg, {}, g_sum);
    }
    CHECK(loss == doctest::Approx(loss_sum / 3));
    CHECK((g_all.classifier - g_sum.classifier / 3).norm() < 1e-12);
    CHECK((g_all.token_embedding - g_sum.token_embedding / 3).norm() < 1e-12);
}
