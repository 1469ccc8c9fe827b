#pragma once

// Supervised fine-tuning with binary cross-entropy and Adam.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "longmatch/metrics.hpp"
#include "longmatch/token_sequence.hpp"
#include "longmatch/transformer.hpp"

namespace longmatch {

struct TrainConfig {
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 8;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;

    void validate() const;
};

/// A filtered, framed example ready for the encoder.
struct PreparedExample {
    TokenSequence seq;
    int label = 0;
};

inline constexpr double kProbClamp = 1e-7;

/// -(y log p + (1-y) log(1-p)) with p clamped to [1e-7, 1-1e-7].
double bce_loss(double p, int y);
/// Mean over the batch.
double bce_loss(std::span<const std::pair<double, int>> batch);

class Adam {
public:
    Adam(const ModelConfig& cfg, const TrainConfig& train_cfg);

    /// Bias-corrected update. Weights are rounded to float32 afterwards.
    void step(ModelWeights& weights, const ModelWeights& grads);
    std::size_t steps() const { return steps_; }

private:
    double lr_, beta1_, beta2_, eps_;
    ModelWeights m_, v_;
    std::size_t steps_ = 0;
};

/// Mean BCE over `batch`; gradients of that mean are added to `grads`.
double accumulate_batch_gradients(std::span<const PreparedExample* const> batch,
                                  const ModelWeights& weights, const ModelConfig& cfg,
                                  const ForwardOptions& opts, ModelWeights& grads);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double dev_acc = 0.0;
    double dev_f1 = 0.0;
    double seconds = 0.0;
};

struct TrainOptions {
    ForwardOptions forward{};
    // Append one JSON line per epoch.
    std::optional<std::filesystem::path> metrics_log;
    std::function<void(const EpochRecord&)> on_epoch;
    std::optional<ModelWeights> initial_weights;
};

struct TrainState {
    ModelWeights weights;
    Adam optimizer;
    std::size_t step = 0;
    ModelWeights best_weights;
    double best_dev_acc = -1.0;
    std::size_t best_epoch = 0;
};

struct TrainResult {
    ModelWeights best_weights;
    ModelWeights final_weights;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> epochs;
};

/// Seeded shuffled mini-batches, one Adam step per batch, dev evaluation and
/// best-accuracy snapshot after every epoch. Throws InputError for an empty
/// training set and DivergedAt when the loss stops being finite.
TrainResult train(const std::vector<PreparedExample>& train_set,
                  const std::vector<PreparedExample>& dev_set, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, const TrainOptions& opts = {});

std::vector<double> predict(const std::vector<PreparedExample>& examples, const ModelWeights& weights,
                            const ModelConfig& cfg, const ForwardOptions& opts = {},
                            std::size_t workers = 1);

Metrics evaluate(const std::vector<PreparedExample>& examples, const ModelWeights& weights,
                 const ModelConfig& cfg, const ForwardOptions& opts = {}, std::size_t workers = 1);

}  // namespace longmatch
