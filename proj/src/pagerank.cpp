#include "longmatch/pagerank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "longmatch/errors.hpp"

namespace longmatch {

StochasticMatrix validate_stochastic(const Eigen::MatrixXd& m, double tol) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw ShapeError("stochastic matrix must be square and non-empty");
    if (!m.allFinite()) throw ShapeError("stochastic matrix has non-finite entries");
    const auto n = static_cast<std::size_t>(m.rows());
    StochasticMatrix out;
    out.dangling_.assign(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        bool all_zero = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (v < 0.0) throw NegativeEntry(i, j);
            if (v != 0.0) all_zero = false;
            sum += v;
        }
        if (all_zero) {
            out.dangling_[j] = true;
        } else if (std::abs(sum - 1.0) > tol) {
            throw NotStochastic(j, sum);
        }
    }
    out.values_ = m;
    return out;
}

void PageRankParams::validate() const {
    if (!(damping >= 0.0 && damping <= 1.0)) throw ConfigError("damping must lie in [0, 1]");
    if (iterations < 1) throw ConfigError("PageRank iterations must be >= 1");
    if (early_stop && !(*early_stop >= 0.0)) throw ConfigError("early-stop threshold must be >= 0");
}

PageRankScores pagerank(const StochasticMatrix& adj, const PageRankParams& params) {
    params.validate();
    const auto n = static_cast<Eigen::Index>(adj.size());
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::MatrixXd a = adj.values();
    for (Eigen::Index j = 0; j < n; ++j)
        if (adj.is_dangling(static_cast<std::size_t>(j))) a.col(j).setConstant(inv_n);

    const double teleport = (1.0 - params.damping) * inv_n;
    PageRankScores out;
    out.u = Eigen::VectorXd::Constant(n, inv_n);
    Eigen::VectorXd next(n);
    for (std::size_t t = 0; t < params.iterations; ++t) {
        next.noalias() = a * out.u;
        next = params.damping * next + Eigen::VectorXd::Constant(n, teleport);
        out.residual = (next - out.u).lpNorm<1>();
        out.u.swap(next);
        out.iterations_run = t + 1;
        if (params.early_stop && out.residual < *params.early_stop) break;
    }
    return out;
}

std::vector<std::size_t> rank_order(const Eigen::VectorXd& scores) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(scores.size()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
    });
    return idx;
}

}  // namespace longmatch
