#pragma once

// Damped power-iteration PageRank over a column-stochastic matrix.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace longmatch {

/// Entry (i, j) is the weight of the link from node j to node i. Every column
/// sums to 1, or is all zero and flagged as dangling.
class StochasticMatrix {
public:
    const Eigen::MatrixXd& values() const { return values_; }
    std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
    const std::vector<bool>& dangling() const { return dangling_; }
    bool is_dangling(std::size_t col) const { return dangling_[col]; }

private:
    friend StochasticMatrix validate_stochastic(const Eigen::MatrixXd&, double);
    Eigen::MatrixXd values_;
    std::vector<bool> dangling_;
};

/// Throws ShapeError for non-square or non-finite input, NegativeEntry for a
/// negative entry, NotStochastic when a nonzero column sum is off by > tol.
StochasticMatrix validate_stochastic(const Eigen::MatrixXd& m, double tol = 1e-6);

struct PageRankParams {
    double damping = 0.85;
    std::size_t iterations = 20;
    // Stop before `iterations` once the L1 change drops below this value.
    std::optional<double> early_stop;

    void validate() const;
};

struct PageRankScores {
    Eigen::VectorXd u;
    std::size_t iterations_run = 0;
    double residual = 0.0;  // L1 norm of the last update
};

/// u0 = 1/n; u <- d*A*u + (1-d)/n, with dangling columns replaced by 1/n.
PageRankScores pagerank(const StochasticMatrix& adj, const PageRankParams& params);

/// Node indices by descending score; ties by ascending index.
std::vector<std::size_t> rank_order(const Eigen::VectorXd& scores);
inline std::vector<std::size_t> rank_order(const PageRankScores& scores) {
    return rank_order(scores.u);
}

}  // namespace longmatch
