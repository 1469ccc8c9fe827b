#pragma once

// Independent reference implementations used only by tests. They use plain
// nested vectors and direct loops, sharing no code path with the library.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

// Direct damped power iteration; zero columns act as uniform columns.
inline Vec power_iteration(const Mat& a, double d, std::size_t iters) {
    const std::size_t n = a.size();
    Vec u(n, 1.0 / n);
    for (std::size_t t = 0; t < iters; ++t) {
        Vec next(n, (1.0 - d) / n);
        for (std::size_t j = 0; j < n; ++j) {
            double col = 0.0;
            for (std::size_t i = 0; i < n; ++i) col += a[i][j];
            for (std::size_t i = 0; i < n; ++i)
                next[i] += d * (col == 0.0 ? 1.0 / n : a[i][j]) * u[j];
        }
        u = next;
    }
    return u;
}

inline Mat random_column_stochastic(std::size_t n, std::mt19937_64& rng, double zero_col_prob = 0.0) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Mat a(n, Vec(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        if (dist(rng) < zero_col_prob) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (a[i][j] = dist(rng) < 0.3 ? 0.0 : dist(rng));
        if (s == 0.0) a[j][j] = s = 1.0;
        for (std::size_t i = 0; i < n; ++i) a[i][j] /= s;
    }
    return a;
}

inline Mat random_row_stochastic(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.01, 1.0);
    Mat a(n, Vec(n));
    for (auto& row : a) {
        double s = 0.0;
        for (auto& v : row) s += (v = dist(rng));
        for (auto& v : row) v /= s;
    }
    return a;
}

inline Mat transpose(const Mat& a) {
    Mat t(a[0].size(), Vec(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
    return t;
}

inline Vec matvec(const Mat& a, const Vec& x) {
    Vec y(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    return y;
}

inline double l1(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

}  // namespace oracle
