#include "longmatch/importance.hpp"

#include <random>

#include "longmatch/errors.hpp"

namespace longmatch {
namespace {

Eigen::VectorXd normalized(Eigen::VectorXd v) {
    const double s = v.sum();
    if (s > 0.0) v /= s;
    else v.setConstant(1.0 / static_cast<double>(v.size()));
    return v;
}

}  // namespace

WordImportance word_importance(const Eigen::MatrixXd& attention, const PageRankParams& params) {
    WordImportance out;
    out.u = pagerank(validate_stochastic(attention.transpose(), 1e-6), params);
    // A row-stochastic A does not preserve the total of u, so r is rescaled
    // to a distribution; the ordering, and hence pruning, is unchanged.
    out.r = normalized(attention * out.u.u);
    return out;
}

std::string_view filter_kind_name(FilterKind kind) {
    switch (kind) {
        case FilterKind::Random: return "Random";
        case FilterKind::EmbeddingNorm: return "EmbeddingNorm";
        case FilterKind::AttentionWeight: return "AttentionWeight";
        case FilterKind::PageRank: return "PageRank";
    }
    return "PageRank";
}

std::optional<FilterKind> parse_filter_kind(std::string_view name) {
    for (auto k : {FilterKind::Random, FilterKind::EmbeddingNorm, FilterKind::AttentionWeight,
                   FilterKind::PageRank})
        if (filter_kind_name(k) == name) return k;
    return std::nullopt;
}

Eigen::VectorXd importance_by_strategy(const FilterStrategy& strategy, const LayerSignals& in,
                                       const PageRankParams& params) {
    const Eigen::Index n = in.attention.rows();
    if (in.attention.cols() != n || in.hidden.rows() != n)
        throw ShapeError("importance inputs disagree on the active token count");
    switch (strategy.kind) {
        case FilterKind::Random: {
            std::mt19937_64 rng(strategy.seed ^ (in.seed * 0x9E3779B97F4A7C15ULL));
            std::uniform_real_distribution<double> dist(0.0, 1.0);
            Eigen::VectorXd r(n);
            for (Eigen::Index i = 0; i < n; ++i) r(i) = dist(rng);
            return normalized(std::move(r));
        }
        case FilterKind::EmbeddingNorm:
            return normalized(in.hidden.rowwise().norm());
        case FilterKind::AttentionWeight:
            return normalized(in.attention.colwise().mean().transpose());
        case FilterKind::PageRank:
            return word_importance(in.attention, params).r;
    }
    return word_importance(in.attention, params).r;
}

}  // namespace longmatch
