#include "longmatch/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "longmatch/errors.hpp"

namespace longmatch {
namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double sig6(double v) { return std::stod(format_sig6(v)); }

nlohmann::json metrics_json(const Metrics& m) {
    return {{"accuracy", sig6(m.accuracy)}, {"f1", sig6(m.f1)}, {"n", m.n_examples},
            {"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
}

}  // namespace

Metrics compute_metrics(std::span<const std::pair<double, int>> predictions, double threshold) {
    if (predictions.empty()) throw InputError("cannot compute metrics over zero predictions");
    Metrics m;
    for (const auto& [p, y] : predictions) {
        if (!(p >= 0.0 && p <= 1.0)) throw InputError("prediction outside [0, 1]");
        const bool pred = p >= threshold;
        if (pred && y == 1) ++m.tp;
        else if (pred) ++m.fp;
        else if (y == 1) ++m.fn;
        else ++m.tn;
    }
    m.n_examples = predictions.size();
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.n_examples);
    const std::size_t denom = 2 * m.tp + m.fp + m.fn;
    m.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(m.tp) / static_cast<double>(denom);
    return m;
}

std::vector<PreparedExample> prepare_examples(const std::vector<MatchExample>& examples,
                                              const Vocab& vocab,
                                              const SentenceFilterParams& filter,
                                              std::size_t max_len) {
    std::vector<PreparedExample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        const auto pair = filter_pair(ex.text_a, ex.text_b, filter);
        out.push_back({assemble_sequence(pair, vocab, max_len), ex.label});
    }
    return out;
}

std::optional<double> signal_retention(const ForwardTrace& trace, const TokenSequence& seq,
                                       const std::unordered_set<std::int32_t>& signal_ids) {
    std::size_t total = 0;
    for (auto id : seq.ids) total += signal_ids.count(id);
    if (total == 0) return std::nullopt;
    std::size_t alive = 0;
    for (auto pos : trace.active.positions.back()) alive += signal_ids.count(seq.ids[pos]);
    return static_cast<double>(alive) / static_cast<double>(total);
}

std::optional<double> mean_signal_retention(const std::vector<PreparedExample>& examples,
                                            const ModelWeights& weights, const ModelConfig& cfg,
                                            const ForwardOptions& opts,
                                            const std::unordered_set<std::int32_t>& signal_ids) {
    if (signal_ids.empty()) return std::nullopt;
    ForwardOptions fo = opts;
    fo.keep_attention = false;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& ex : examples) {
        const auto trace = forward(ex.seq, weights, cfg, fo);
        if (auto r = signal_retention(trace, ex.seq, signal_ids)) {
            sum += *r;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::vector<FilterStrategy> default_strategies(std::uint64_t random_seed) {
    return {{FilterKind::Random, random_seed},
            {FilterKind::EmbeddingNorm, 0},
            {FilterKind::AttentionWeight, 0},
            {FilterKind::PageRank, 0}};
}

std::vector<StrategyRow> strategy_sweep(const SweepData& data, const ModelConfig& model_cfg,
                                        const TrainConfig& train_cfg,
                                        const std::vector<FilterStrategy>& strategies) {
    std::vector<StrategyRow> rows;
    for (const auto& strategy : strategies) {
        TrainOptions opts;
        opts.forward.strategy = strategy;
        const auto result = train(data.train, data.dev, model_cfg, train_cfg, opts);
        StrategyRow row;
        row.strategy = strategy;
        row.best_epoch = result.best_epoch;
        const auto& eval_set = data.dev.empty() ? data.train : data.dev;
        row.metrics = evaluate(eval_set, result.best_weights, model_cfg, opts.forward);
        row.signal_retention = mean_signal_retention(eval_set, result.best_weights, model_cfg,
                                                     opts.forward, data.signal_ids);
        rows.push_back(row);
    }
    return rows;
}

BatchTiming measure_batch_times(const std::vector<PreparedExample>& examples,
                                const ModelWeights& weights, const ModelConfig& cfg,
                                const TrainConfig& train_cfg, const TimingOptions& timing,
                                const ForwardOptions& opts) {
    if (examples.empty()) throw InputError("timing needs at least one example");
    using clock = std::chrono::steady_clock;
    ForwardOptions fo = opts;
    fo.keep_attention = false;
    std::vector<const PreparedExample*> batch;
    std::size_t cursor = 0;
    auto next_batch = [&] {
        batch.clear();
        for (std::size_t i = 0; i < timing.batch_size; ++i)
            batch.push_back(&examples[cursor++ % examples.size()]);
    };

    BatchTiming out;
    std::vector<double> samples;
    double sink = 0.0;
    for (std::size_t b = 0; b < timing.warmup + timing.measured; ++b) {
        next_batch();
        const auto t0 = clock::now();
        for (const auto* ex : batch) sink += forward(ex->seq, weights, cfg, fo).p;
        const double dt = std::chrono::duration<double>(clock::now() - t0).count();
        if (b >= timing.warmup) samples.push_back(dt);
    }
    out.eval_seconds = median(samples);

    if (timing.time_training) {
        samples.clear();
        ModelWeights local = weights;
        ModelWeights grads = ModelWeights::zeros(cfg);
        Adam adam(cfg, train_cfg);
        cursor = 0;
        for (std::size_t b = 0; b < timing.warmup + timing.measured; ++b) {
            next_batch();
            const auto t0 = clock::now();
            for (auto& [name, t] : grads.named_tensors()) t->setZero();
            sink += accumulate_batch_gradients(batch, local, cfg, fo, grads);
            adam.step(local, grads);
            const double dt = std::chrono::duration<double>(clock::now() - t0).count();
            if (b >= timing.warmup) samples.push_back(dt);
        }
        out.train_seconds = median(samples);
    }
    if (!std::isfinite(sink)) throw NonFinite("timing run");
    return out;
}

std::vector<AlphaRow> alpha_sweep(const SweepData& data, const ModelConfig& model_cfg,
                                  const TrainConfig& train_cfg, const std::vector<double>& alphas,
                                  const TimingOptions& timing) {
    std::vector<AlphaRow> rows;
    for (double alpha : alphas) {
        ModelConfig cfg = model_cfg;
        cfg.alpha = alpha;
        cfg.validate();
        const auto result = train(data.train, data.dev, cfg, train_cfg);
        AlphaRow row;
        row.alpha = alpha;
        const auto& eval_set = data.dev.empty() ? data.train : data.dev;
        row.metrics = evaluate(eval_set, result.best_weights, cfg);
        row.schedule = pruning_schedule(cfg.max_len, cfg.layers, alpha, 3);
        row.time_cost = time_cost_model(alpha, cfg.layers);
        row.timing = measure_batch_times(eval_set, result.best_weights, cfg, train_cfg, timing);
        rows.push_back(row);
    }
    return rows;
}

double time_cost_model(double alpha, std::size_t layers) {
    double sum = 0.0;
    for (std::size_t l = 0; l < layers; ++l) sum += std::pow(1.0 - alpha, 2.0 * static_cast<double>(l));
    return sum;
}

std::string format_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string strategy_table_csv(const std::vector<StrategyRow>& rows) {
    std::ostringstream out;
    out << "strategy,accuracy,f1,n,signal_retention,best_epoch\n";
    for (const auto& r : rows) {
        out << filter_kind_name(r.strategy.kind) << ',' << format_sig6(r.metrics.accuracy) << ','
            << format_sig6(r.metrics.f1) << ',' << r.metrics.n_examples << ','
            << (r.signal_retention ? format_sig6(*r.signal_retention) : std::string()) << ','
            << r.best_epoch << '\n';
    }
    return out.str();
}

nlohmann::json strategy_table_json(const std::vector<StrategyRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json rec = {{"strategy", filter_kind_name(r.strategy.kind)},
                              {"metrics", metrics_json(r.metrics)},
                              {"best_epoch", r.best_epoch}};
        rec["signal_retention"] =
            r.signal_retention ? nlohmann::json(sig6(*r.signal_retention)) : nlohmann::json();
        out.push_back(std::move(rec));
    }
    return out;
}

std::string alpha_table_csv(const std::vector<AlphaRow>& rows) {
    std::ostringstream out;
    out << "alpha,accuracy,f1,n,time_cost,train_seconds_per_batch,eval_seconds_per_batch,schedule\n";
    for (const auto& r : rows) {
        std::string sched;
        for (std::size_t i = 0; i < r.schedule.size(); ++i)
            sched += (i ? " " : "") + std::to_string(r.schedule[i]);
        out << format_sig6(r.alpha) << ',' << format_sig6(r.metrics.accuracy) << ','
            << format_sig6(r.metrics.f1) << ',' << r.metrics.n_examples << ','
            << format_sig6(r.time_cost) << ',' << format_sig6(r.timing.train_seconds) << ','
            << format_sig6(r.timing.eval_seconds) << ',' << sched << '\n';
    }
    return out.str();
}

nlohmann::json alpha_table_json(const std::vector<AlphaRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows)
        out.push_back({{"alpha", sig6(r.alpha)},
                       {"metrics", metrics_json(r.metrics)},
                       {"schedule", r.schedule},
                       {"time_cost", sig6(r.time_cost)},
                       {"train_seconds_per_batch", sig6(r.timing.train_seconds)},
                       {"eval_seconds_per_batch", sig6(r.timing.eval_seconds)}});
    return out;
}

}  // namespace longmatch
