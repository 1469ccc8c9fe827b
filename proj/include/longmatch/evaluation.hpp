#pragma once

// Ablation harnesses: filter-strategy comparison, word-reduction-ratio sweep
// with per-batch timing, and the quadratic attention cost model.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "longmatch/corpus.hpp"
#include "longmatch/importance.hpp"
#include "longmatch/metrics.hpp"
#include "longmatch/sentence_filter.hpp"
#include "longmatch/training.hpp"
#include "longmatch/transformer.hpp"

namespace longmatch {

/// Sentence-filters and frames every example once.
std::vector<PreparedExample> prepare_examples(const std::vector<MatchExample>& examples,
                                              const Vocab& vocab,
                                              const SentenceFilterParams& filter,
                                              std::size_t max_len);

struct SweepData {
    std::vector<PreparedExample> train;
    std::vector<PreparedExample> dev;
    std::unordered_set<std::int32_t> signal_ids;  // empty when unknown
};

/// Share of signal-token positions still active in the last layer, or
/// nullopt when the sequence holds no signal token.
std::optional<double> signal_retention(const ForwardTrace& trace, const TokenSequence& seq,
                                       const std::unordered_set<std::int32_t>& signal_ids);

/// Mean of signal_retention over the examples that contain signal tokens.
std::optional<double> mean_signal_retention(const std::vector<PreparedExample>& examples,
                                            const ModelWeights& weights, const ModelConfig& cfg,
                                            const ForwardOptions& opts,
                                            const std::unordered_set<std::int32_t>& signal_ids);

struct StrategyRow {
    FilterStrategy strategy;
    Metrics metrics;
    std::optional<double> signal_retention;
    std::size_t best_epoch = 0;
};

/// Trains and evaluates one model per strategy with identical seeds.
std::vector<StrategyRow> strategy_sweep(const SweepData& data, const ModelConfig& model_cfg,
                                        const TrainConfig& train_cfg,
                                        const std::vector<FilterStrategy>& strategies);

std::vector<FilterStrategy> default_strategies(std::uint64_t random_seed = 0);

struct BatchTiming {
    double train_seconds = 0.0;  // median per batch: forward, backward and update
    double eval_seconds = 0.0;   // median per batch: forward only
};

struct TimingOptions {
    std::size_t batch_size = 8;
    std::size_t warmup = 5;
    std::size_t measured = 50;
    bool time_training = true;
};

/// Cycles through `examples` in fixed batches on the calling thread.
BatchTiming measure_batch_times(const std::vector<PreparedExample>& examples,
                                const ModelWeights& weights, const ModelConfig& cfg,
                                const TrainConfig& train_cfg, const TimingOptions& timing,
                                const ForwardOptions& opts = {});

struct AlphaRow {
    double alpha = 0.0;
    Metrics metrics;
    std::vector<std::size_t> schedule;  // for a full-length (max_len) input
    double time_cost = 0.0;             // cost model value
    BatchTiming timing;
};

std::vector<AlphaRow> alpha_sweep(const SweepData& data, const ModelConfig& model_cfg,
                                  const TrainConfig& train_cfg, const std::vector<double>& alphas,
                                  const TimingOptions& timing = {});

/// sum_{l=0}^{L-1} (1 - alpha)^(2l): attention cost relative to one full layer.
double time_cost_model(double alpha, std::size_t layers);

std::string strategy_table_csv(const std::vector<StrategyRow>& rows);
nlohmann::json strategy_table_json(const std::vector<StrategyRow>& rows);
std::string alpha_table_csv(const std::vector<AlphaRow>& rows);
nlohmann::json alpha_table_json(const std::vector<AlphaRow>& rows);

/// printf("%.6g") formatting used by every table.
std::string format_sig6(double v);

}  // namespace longmatch
