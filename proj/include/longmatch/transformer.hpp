#pragma once

// Post-norm multi-head self-attention encoder whose per-layer averaged
// attention drives token pruning between layers.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "longmatch/importance.hpp"
#include "longmatch/pagerank.hpp"
#include "longmatch/token_sequence.hpp"

namespace longmatch {

using Tensor = Eigen::MatrixXd;

struct ModelConfig {
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t width = 32;     // E
    std::size_t max_len = 128;  // N
    std::size_t ff_width = 64;
    std::size_t vocab_size = 0;
    double alpha = 0.1;  // word reduction ratio
    PageRankParams pagerank{0.85, 20, std::nullopt};
    std::uint64_t init_seed = 1;

    std::size_t head_width() const { return width / heads; }
    void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct LayerWeights {
    std::vector<Tensor> query, key, value;  // per head, E x E/H
    Tensor output;                          // E x E
    Tensor ff_in, ff_in_bias;               // E x F, 1 x F
    Tensor ff_out, ff_out_bias;             // F x E, 1 x E
    Tensor norm1_gain, norm1_bias;          // 1 x E
    Tensor norm2_gain, norm2_bias;
};

struct ModelWeights {
    Tensor token_embedding;     // vocab x E
    Tensor position_embedding;  // N x E
    std::vector<LayerWeights> layers;
    Tensor classifier;       // 1 x E
    Tensor classifier_bias;  // 1 x 1

    /// Same shapes as `initialize`, every entry zero (gradient buffers).
    static ModelWeights zeros(const ModelConfig& cfg);
    /// Uniform in +-1/sqrt(E); norm gains 1; biases 0. Values are rounded to
    /// float32 so checkpoints reproduce them exactly.
    static ModelWeights initialize(const ModelConfig& cfg);

    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
    std::size_t parameter_count() const;
    bool all_finite() const;
    void round_to_float();
};

/// count(l) = max(protected, floor(n * (1 - alpha)^(l-1))), l = 1..layers.
std::vector<std::size_t> pruning_schedule(std::size_t n, std::size_t layers, double alpha,
                                          std::size_t protected_count);

struct LayerOutput {
    Tensor hidden;             // active_n x E
    Tensor attention;          // head average, active_n x active_n
    std::vector<Tensor> heads;  // per-head attention
};

/// One encoder block over the active rows: attention sublayer and
/// feed-forward sublayer, each followed by residual add and layer norm.
LayerOutput attention_layer(const Tensor& hidden, const LayerWeights& weights,
                            const ModelConfig& cfg);

/// Keeps every protected position, then the highest-r others (ties by
/// ascending position) up to `target`; returns positions in ascending order.
/// `active` is ascending, `r` is aligned with it, `protected_mask` is indexed
/// by original position.
std::vector<std::size_t> prune_tokens(std::span<const std::size_t> active, const Eigen::VectorXd& r,
                                      std::size_t target, const std::vector<bool>& protected_mask);

struct ActiveSet {
    std::vector<std::vector<std::size_t>> positions;  // per layer, ascending
    std::vector<Eigen::VectorXd> importance;          // r per layer over positions
};

struct LayerTrace {
    Tensor attention;  // head average over the layer's active tokens
    std::optional<PageRankScores> pagerank;  // PageRank strategy only
};

struct ForwardTrace {
    double p = 0.0;
    double logit = 0.0;
    std::vector<LayerTrace> layers;
    ActiveSet active;
    std::vector<std::size_t> retention_depth;  // per original position
};

struct ForwardOptions {
    FilterStrategy strategy{};
    bool keep_attention = true;
};

ForwardTrace forward(const TokenSequence& seq, const ModelWeights& weights, const ModelConfig& cfg,
                     const ForwardOptions& opts = {});

namespace detail {
struct Tape;
}

struct TapedForward {
    ForwardTrace trace;
    std::shared_ptr<const detail::Tape> tape;
};

TapedForward forward_taped(const TokenSequence& seq, const ModelWeights& weights,
                           const ModelConfig& cfg, const ForwardOptions& opts = {});

/// Accumulates d(loss)/d(weights) into `grads` given d(loss)/d(logit).
/// Pruning decisions recorded on the tape are held fixed.
void backward(const TapedForward& taped, const ModelWeights& weights, double dlogit,
              ModelWeights& grads);

nlohmann::json trace_to_json(const ForwardTrace& trace, const TokenSequence& seq,
                             const std::vector<std::string>& token_text);

}  // namespace longmatch
