#include "longmatch/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

#include "longmatch/errors.hpp"

namespace longmatch {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw ConfigError("adam betas must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

double bce_loss(double p, int y) {
    const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return -(y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

double bce_loss(std::span<const std::pair<double, int>> batch) {
    if (batch.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [p, y] : batch) sum += bce_loss(p, y);
    return sum / static_cast<double>(batch.size());
}

Adam::Adam(const ModelConfig& cfg, const TrainConfig& tc)
    : lr_(tc.learning_rate), beta1_(tc.beta1), beta2_(tc.beta2), eps_(tc.epsilon),
      m_(ModelWeights::zeros(cfg)), v_(ModelWeights::zeros(cfg)) {}

void Adam::step(ModelWeights& weights, const ModelWeights& grads) {
    ++steps_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    auto w = weights.named_tensors();
    auto g = grads.named_tensors();
    auto m = m_.named_tensors();
    auto v = v_.named_tensors();
    for (std::size_t k = 0; k < w.size(); ++k) {
        auto& mk = *m[k].second;
        auto& vk = *v[k].second;
        const auto& gk = *g[k].second;
        mk = beta1_ * mk + (1.0 - beta1_) * gk;
        vk = beta2_ * vk + (1.0 - beta2_) * gk.cwiseProduct(gk);
        w[k].second->array() -=
            lr_ * (mk.array() / c1) / ((vk.array() / c2).sqrt() + eps_);
    }
    weights.round_to_float();
    if (!weights.all_finite()) throw NonFinite("weights after optimizer step " + std::to_string(steps_));
}

double accumulate_batch_gradients(std::span<const PreparedExample* const> batch,
                                  const ModelWeights& weights, const ModelConfig& cfg,
                                  const ForwardOptions& opts, ModelWeights& grads) {
    if (batch.empty()) return 0.0;
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    ForwardOptions fo = opts;
    fo.keep_attention = false;
    for (const PreparedExample* ex : batch) {
        const auto taped = forward_taped(ex->seq, weights, cfg, fo);
        loss += bce_loss(taped.trace.p, ex->label);
        backward(taped, weights, (taped.trace.p - ex->label) * scale, grads);
    }
    return loss * scale;
}

std::vector<double> predict(const std::vector<PreparedExample>& examples, const ModelWeights& weights,
                            const ModelConfig& cfg, const ForwardOptions& opts, std::size_t workers) {
    std::vector<double> out(examples.size());
    ForwardOptions fo = opts;
    fo.keep_attention = false;
    auto run = [&](std::size_t first) {
        for (std::size_t i = first; i < examples.size(); i += std::max<std::size_t>(workers, 1))
            out[i] = forward(examples[i].seq, weights, cfg, fo).p;
    };
    if (workers <= 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }
    return out;
}

Metrics evaluate(const std::vector<PreparedExample>& examples, const ModelWeights& weights,
                 const ModelConfig& cfg, const ForwardOptions& opts, std::size_t workers) {
    const auto probs = predict(examples, weights, cfg, opts, workers);
    std::vector<std::pair<double, int>> pairs;
    pairs.reserve(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) pairs.emplace_back(probs[i], examples[i].label);
    return compute_metrics(pairs);
}

TrainResult train(const std::vector<PreparedExample>& train_set,
                  const std::vector<PreparedExample>& dev_set, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, const TrainOptions& opts) {
    model_cfg.validate();
    train_cfg.validate();
    if (train_set.empty()) throw InputError("training set is empty");

    TrainState state{opts.initial_weights ? *opts.initial_weights : ModelWeights::initialize(model_cfg),
                     Adam(model_cfg, train_cfg), 0, ModelWeights{}, -1.0, 0};
    std::mt19937_64 rng(train_cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::ofstream log;
    if (opts.metrics_log) {
        log.open(*opts.metrics_log, std::ios::app);
        if (!log) throw InputError("cannot open metrics log " + opts.metrics_log->string());
    }

    TrainResult result;
    ModelWeights grads = ModelWeights::zeros(model_cfg);
    for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        std::vector<const PreparedExample*> batch;
        for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + train_cfg.batch_size); ++i)
                batch.push_back(&train_set[order[i]]);
            for (auto& [name, t] : grads.named_tensors()) t->setZero();
            const double loss =
                accumulate_batch_gradients(batch, state.weights, model_cfg, opts.forward, grads);
            ++state.step;
            if (!std::isfinite(loss)) throw DivergedAt(state.step);
            state.optimizer.step(state.weights, grads);
            loss_sum += loss;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(batches);
        if (!dev_set.empty()) {
            const auto m = evaluate(dev_set, state.weights, model_cfg, opts.forward);
            rec.dev_acc = m.accuracy;
            rec.dev_f1 = m.f1;
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dev_set.empty() || rec.dev_acc > state.best_dev_acc) {
            state.best_dev_acc = rec.dev_acc;
            state.best_weights = state.weights;
            state.best_epoch = epoch;
        }
        if (log) {
            log << nlohmann::json{{"epoch", rec.epoch}, {"train_loss", rec.train_loss},
                                  {"dev_acc", rec.dev_acc}, {"dev_f1", rec.dev_f1},
                                  {"seconds", rec.seconds}}
                       .dump()
                << '\n';
            log.flush();
        }
        if (opts.on_epoch) opts.on_epoch(rec);
        result.epochs.push_back(rec);
    }
    result.best_weights = std::move(state.best_weights);
    result.final_weights = std::move(state.weights);
    result.best_epoch = state.best_epoch;
    return result;
}

}  // namespace longmatch
