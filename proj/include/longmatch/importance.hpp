#pragma once

// Word-importance scoring over one layer's head-averaged attention matrix.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "longmatch/pagerank.hpp"

namespace longmatch {

struct WordImportance {
    PageRankScores u;   // importance of the layer's input tokens
    Eigen::VectorXd r;  // importance of the layer's output tokens, A * u scaled to sum 1
};

/// `attention` is row-stochastic; its transpose is the PageRank transition.
WordImportance word_importance(const Eigen::MatrixXd& attention, const PageRankParams& params);

enum class FilterKind { Random, EmbeddingNorm, AttentionWeight, PageRank };

struct FilterStrategy {
    FilterKind kind = FilterKind::PageRank;
    std::uint64_t seed = 0;  // Random only
};

std::string_view filter_kind_name(FilterKind kind);
std::optional<FilterKind> parse_filter_kind(std::string_view name);

struct LayerSignals {
    const Eigen::MatrixXd& attention;  // active_n x active_n
    const Eigen::MatrixXd& hidden;     // active_n x E
    std::uint64_t seed = 0;            // mixed into the Random stream
};

/// Random: seeded uniform scores. EmbeddingNorm: row L2 norms of `hidden`.
/// AttentionWeight: column means of `attention`. PageRank: word_importance.
/// Every result is normalized to sum to 1.
Eigen::VectorXd importance_by_strategy(const FilterStrategy& strategy, const LayerSignals& in,
                                       const PageRankParams& params);

}  // namespace longmatch
