// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "encoder_oracle.hpp"
#include "gradcheck.hpp"
#include "longmatch/corpus.hpp"
#include "longmatch/evaluation.hpp"
#include "longmatch/pagerank.hpp"
#include "longmatch/sentence_filter.hpp"
#include "longmatch/synthetic.hpp"
#include "longmatch/training.hpp"
#include "longmatch/transformer.hpp"
#include "oracles.hpp"

using namespace longmatch;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Eigen::MatrixXd to_eigen(const oracle::Mat& a) {
    Eigen::MatrixXd m(a.size(), a[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) m(i, j) = a[i][j];
    return m;
}

const StopwordSet& stopwords() {
    static const StopwordSet s = load_stopwords(default_stopword_path());
    return s;
}

ModelConfig tiny_config() {
    ModelConfig c;
    c.layers = 2;
    c.heads = 2;
    c.width = 8;
    c.max_len = 16;
    c.ff_width = 16;
    c.vocab_size = 40;
    c.alpha = 0.25;
    return c;
}

// Model and optimiser settings used for the synthetic task.
ModelConfig desk_model() {
    ModelConfig c;
    c.layers = 4;
    c.heads = 2;
    c.width = 32;
    c.ff_width = 64;
    c.max_len = 128;
    c.alpha = 0.10;
    return c;
}

TrainConfig desk_training(std::uint64_t seed) {
    TrainConfig t;
    t.learning_rate = 1e-3;
    t.batch_size = 8;
    t.epochs = 10;
    t.seed = seed;
    return t;
}

struct PreparedTask {
    SweepData data;
    std::size_t vocab_size = 0;
};

PreparedTask prepare_task(std::uint64_t seed, std::size_t n_train, std::size_t n_dev) {
    SyntheticTask task;
    task.seed = seed;
    const auto raw = generate_synthetic(task, n_train, n_dev);
    const auto train_ex = parse_dataset(to_jsonl(raw.train), stopwords());
    const auto dev_ex = parse_dataset(to_jsonl(raw.dev), stopwords());
    const Vocab vocab = build_vocab(train_ex, 2);
    SentenceFilterParams filter;
    filter.lambda = 5;
    PreparedTask out;
    out.vocab_size = vocab.size();
    out.data.train = prepare_examples(train_ex, vocab, filter, desk_model().max_len);
    out.data.dev = prepare_examples(dev_ex, vocab, filter, desk_model().max_len);
    for (const auto& t : raw.signal_tokens)
        if (vocab.contains(t)) out.data.signal_ids.insert(vocab.id(t));
    return out;
}

// 1. PageRank against the direct power-iteration oracle.
Outcome pagerank_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 8);
        const auto a = oracle::random_column_stochastic(n, rng, trial % 4 == 0 ? 0.2 : 0.0);
        const auto s = pagerank(validate_stochastic(to_eigen(a)), {0.85, 100, std::nullopt});
        const auto ref = oracle::power_iteration(a, 0.85, 100);
        worst = std::max(worst, oracle::l1({s.u.data(), s.u.data() + s.u.size()}, ref));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-8 && secs < 5.0, "max L1 " + fmt("%.3g", worst) + ", " + fmt("%.3f", secs) + " s"};
}

// 2. Published layer counts for N=400, L=12, alpha=10%.
Outcome schedule_reproduction() {
    const std::vector<std::size_t> expected{400, 360, 324, 291, 262, 236, 212, 191, 172, 154, 139, 125};
    const auto t0 = Clock::now();
    const auto got = pruning_schedule(400, 12, 0.10, 0);
    const double secs = seconds_since(t0);
    std::string shown;
    for (auto c : got) shown += (shown.empty() ? "" : " ") + std::to_string(c);
    return {got == expected && secs < 1e-3, "[" + shown + "], " + fmt("%.1f", secs * 1e6) + " us"};
}

// 3. Attention rows and importance vectors stay distributions.
Outcome stochasticity() {
    auto cfg = tiny_config();
    std::mt19937_64 rng(31);
    double worst_row = 0.0, worst_u = 0.0, worst_r = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        cfg.init_seed = static_cast<std::uint64_t>(trial + 1);
        const auto w = ModelWeights::initialize(cfg);
        const auto seq = gradcheck::random_sequence(5 + rng() % 12, cfg.vocab_size, rng);
        const auto t = forward(seq, w, cfg);
        for (std::size_t l = 0; l < t.layers.size(); ++l) {
            const auto& a = t.layers[l].attention;
            for (Eigen::Index i = 0; i < a.rows(); ++i) worst_row = std::max(worst_row, std::abs(a.row(i).sum() - 1.0));
            worst_u = std::max(worst_u, std::abs(t.layers[l].pagerank->u.sum() - 1.0));
            worst_r = std::max(worst_r, std::abs(t.active.importance[l].sum() - 1.0));
        }
    }
    const bool ok = worst_row <= 1e-5 && worst_u <= 1e-5 && worst_r <= 1e-5;
    return {ok, "max |row-1| " + fmt("%.2g", worst_row) + ", |sum u-1| " + fmt("%.2g", worst_u) +
                    ", |sum r-1| " + fmt("%.2g", worst_r)};
}

// 4. With alpha = 0 the model is a plain encoder.
Outcome identity_configuration() {
    auto cfg = tiny_config();
    cfg.alpha = 0.0;
    std::mt19937_64 rng(41);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        cfg.init_seed = static_cast<std::uint64_t>(trial + 1);
        const auto w = ModelWeights::initialize(cfg);
        const auto seq = gradcheck::random_sequence(4 + rng() % 13, cfg.vocab_size, rng);
        const double p = forward(seq, w, cfg).p;
        worst = std::max(worst, std::abs(p - oracle::dense_encoder_probability(seq.ids, w, cfg.heads)));
    }
    return {worst < 1e-6, "max |dp| " + fmt("%.3g", worst)};
}

// 5. Backward pass against central finite differences.
Outcome gradient_check() {
    ModelConfig cfg;
    cfg.layers = 1;
    cfg.heads = 1;
    cfg.width = 4;
    cfg.ff_width = 8;
    cfg.max_len = 5;
    cfg.vocab_size = 10;
    cfg.alpha = 0.1;
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string where;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        const auto seq = gradcheck::random_sequence(5, cfg.vocab_size, rng);
        const auto w = gradcheck::random_weights(cfg, rng);
        const auto r = gradcheck::check(seq, w, cfg, static_cast<int>(seed % 2));
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            where = r.worst_tensor;
        }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 120.0,
            "max rel err " + fmt("%.3g", worst) + " (" + where + "), " + fmt("%.2f", secs) + " s"};
}

// 6. The planted-signal task is learned.
Outcome synthetic_end_to_end() {
    const auto t0 = Clock::now();
    const auto task = prepare_task(1, 1000, 200);
    auto cfg = desk_model();
    cfg.vocab_size = task.vocab_size;
    TrainOptions opts;
    opts.on_epoch = [](const EpochRecord& r) {
        std::printf("    epoch %zu loss %.4f dev acc %.4f (%.1f s)\n", r.epoch, r.train_loss, r.dev_acc, r.seconds);
        std::fflush(stdout);
    };
    const auto result = train(task.data.train, task.data.dev, cfg, desk_training(1), opts);
    double best = 0.0;
    for (const auto& e : result.epochs) best = std::max(best, e.dev_acc);
    const double secs = seconds_since(t0);
    return {best > 0.95 && result.epochs.size() <= 10 && secs < 900.0,
            "best dev acc " + fmt("%.4f", best) + " at epoch " + std::to_string(result.best_epoch) + ", " +
                fmt("%.0f", secs) + " s"};
}

// 7. Importance strategies ordered by how many signal tokens survive.
Outcome strategy_ordering() {
    constexpr std::uint64_t kSeeds = 10;
    const std::vector<FilterKind> kinds{FilterKind::Random, FilterKind::AttentionWeight, FilterKind::PageRank};
    double ret[3] = {0, 0, 0}, acc[3] = {0, 0, 0};
    std::string failures;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        const auto task = prepare_task(100 + seed, 1000, 200);
        auto cfg = desk_model();
        cfg.vocab_size = task.vocab_size;
        cfg.init_seed = seed;
        std::vector<FilterStrategy> strategies;
        for (auto k : kinds) strategies.push_back({k, seed});
        auto tc = desk_training(seed);
        const auto rows = strategy_sweep(task.data, cfg, tc, strategies);
        double r[3], a[3];
        for (int k = 0; k < 3; ++k) {
            r[k] = rows[k].signal_retention.value_or(0.0);
            a[k] = rows[k].metrics.accuracy;
            ret[k] += r[k] / kSeeds;
            acc[k] += a[k] / kSeeds;
        }
        std::printf("    seed %2llu retention R %.3f AW %.3f PR %.3f | dev acc R %.3f AW %.3f PR %.3f\n",
                    static_cast<unsigned long long>(seed), r[0], r[1], r[2], a[0], a[1], a[2]);
        std::fflush(stdout);
        std::string bad;
        if (r[2] < r[1]) bad += " PR<AW";
        if (r[1] < r[0]) bad += " AW<R";
        if (a[2] < a[0]) bad += " acc PR<R";
        if (!bad.empty()) failures += " seed " + std::to_string(seed) + ":" + bad + ";";
    }
    std::printf("    per-seed failures:%s\n", failures.empty() ? " none" : failures.c_str());
    const bool ok = ret[2] >= ret[1] && ret[1] >= ret[0] && acc[2] >= acc[0];
    return {ok, "mean retention R " + fmt("%.4f", ret[0]) + " AW " + fmt("%.4f", ret[1]) + " PR " +
                    fmt("%.4f", ret[2]) + "; mean dev acc R " + fmt("%.4f", acc[0]) + " PR " + fmt("%.4f", acc[2])};
}

// 8. AttentionWeight is one undamped PageRank step from the uniform vector.
Outcome attention_weight_special_case() {
    std::mt19937_64 rng(81);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 12);
        const Eigen::MatrixXd a = to_eigen(oracle::random_row_stochastic(n, rng));
        const Eigen::MatrixXd hidden = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 2);
        const auto aw = importance_by_strategy({FilterKind::AttentionWeight, 0}, {a, hidden, 0},
                                               {0.85, 20, std::nullopt});
        const auto pr = pagerank(validate_stochastic(a.transpose()), {1.0, 1, std::nullopt});
        worst = std::max(worst, (aw - pr.u).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-8, "max |diff| " + fmt("%.3g", worst)};
}

// 9. Cost model ratio and measured inference speedup.
Outcome cost_and_speedup() {
    const double c0 = time_cost_model(0.0, 12), c20 = time_cost_model(0.2, 12);
    const bool model_ok = std::abs(c0 - 12.0) < 1e-12 && std::abs(c20 - 2.76) < 5e-3 &&
                          std::abs(c0 / c20 - 4.3) < 0.05;

    ModelConfig cfg;
    cfg.layers = 6;
    cfg.heads = 4;
    cfg.width = 64;
    cfg.ff_width = 128;
    cfg.max_len = 256;
    cfg.vocab_size = 500;
    std::mt19937_64 rng(91);
    std::vector<PreparedExample> batch;
    for (int i = 0; i < 16; ++i) batch.push_back({gradcheck::random_sequence(256, cfg.vocab_size, rng), i % 2});
    const auto weights = ModelWeights::initialize(cfg);
    TimingOptions timing;
    timing.batch_size = 8;
    timing.warmup = 3;
    timing.measured = 25;
    timing.time_training = false;

    const std::vector<double> alphas{0.0, 0.05, 0.10, 0.20};
    std::vector<double> secs;
    for (double a : alphas) {
        cfg.alpha = a;
        secs.push_back(measure_batch_times(batch, weights, cfg, desk_training(1), timing).eval_seconds);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < secs.size(); ++i) monotone = monotone && secs[i] <= secs[i - 1];
    const double speedup = secs[0] / secs[3];
    std::string shown;
    for (double s : secs) shown += (shown.empty() ? "" : " ") + fmt("%.4f", s);
    return {model_ok && monotone && speedup >= 1.3,
            "TimeCost 12/" + fmt("%.4f", c20) + " = " + fmt("%.3f", c0 / c20) + "; eval s/batch [" + shown +
                "], speedup " + fmt("%.2f", speedup) + "x"};
}

// 10. Sentence selection is balanced and schedule-independent.
Outcome filter_balance() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> sentences(1, 16), len(2, 8), word(0, 59);
    auto random_text = [&] {
        std::string t;
        const std::size_t n = sentences(rng);
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t k = len(rng);
            for (std::size_t i = 0; i < k; ++i) t += (i ? " w" : "W") + std::to_string(word(rng));
            t += ". ";
        }
        return t;
    };
    std::size_t bad_counts = 0, mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = make_document("a", random_text(), stopwords());
        const auto b = make_document("b", random_text(), stopwords());
        SentenceFilterParams p;
        p.lambda = 5;
        const auto ref = filter_pair(a, b, p);
        if (ref.selected_a.size() != std::min<std::size_t>(5, a.sentences.size()) ||
            ref.selected_b.size() != std::min<std::size_t>(5, b.sentences.size()))
            ++bad_counts;
        for (std::size_t workers : {1, 2, 4, 8}) {
            p.workers = workers;
            const auto again = filter_pair(a, b, p);
            if (again.indices_a != ref.indices_a || again.indices_b != ref.indices_b || again.scores.u != ref.scores.u)
                ++mismatches;
        }
    }
    return {bad_counts == 0 && mismatches == 0, std::to_string(bad_counts) + " count violations, " +
                                                     std::to_string(mismatches) + " mismatches over 400 reruns"};
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments pick criteria by number, e.g. `acceptance 1 5 9`.
    std::vector<std::string> only(argv + 1, argv + argc);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 pagerank oracle equivalence", pagerank_oracle},
        {"2 schedule reproduction", schedule_reproduction},
        {"3 stochasticity invariant", stochasticity},
        {"4 identity configuration", identity_configuration},
        {"5 gradient check", gradient_check},
        {"6 synthetic end-to-end", synthetic_end_to_end},
        {"7 strategy ordering", strategy_ordering},
        {"8 attention weight special case", attention_weight_special_case},
        {"9 cost model and speedup", cost_and_speedup},
        {"10 sentence filter balance and determinism", filter_balance},
    };
    int failed = 0;
    std::size_t ran = 0;
    for (const auto& [name, run] : criteria) {
        const std::string number = name.substr(0, name.find(' '));
        if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
        ++ran;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(ran) - failed, ran);
    return failed == 0 ? 0 : 1;
}
