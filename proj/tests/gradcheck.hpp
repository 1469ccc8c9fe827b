#pragma once

// Finite-difference gradient check against the analytic backward pass.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "longmatch/training.hpp"
#include "longmatch/corpus.hpp"
#include "longmatch/transformer.hpp"

namespace gradcheck {

struct Result {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::size_t compared = 0;
};

inline longmatch::TokenSequence random_sequence(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::int32_t> id(4, static_cast<std::int32_t>(vocab) - 1);
    longmatch::TokenSequence s;
    const std::size_t sep = 1 + (n - 3) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const bool framed = i == 0 || i == sep || i + 1 == n;
        s.ids.push_back(i == 0 ? longmatch::Vocab::kCls : framed ? longmatch::Vocab::kSep : id(rng));
        s.protected_mask.push_back(framed);
    }
    return s;
}

// Weights drawn wider than the default init so every sublayer contributes.
inline longmatch::ModelWeights random_weights(const longmatch::ModelConfig& cfg, std::mt19937_64& rng) {
    auto w = longmatch::ModelWeights::initialize(cfg);
    std::normal_distribution<double> g(0.0, 0.5);
    for (auto& [name, t] : w.named_tensors())
        for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] += g(rng);
    return w;
}

inline double loss_of(const longmatch::TokenSequence& seq, const longmatch::ModelWeights& w,
                      const longmatch::ModelConfig& cfg, int label) {
    return longmatch::bce_loss(longmatch::forward(seq, w, cfg).p, label);
}

// Fourth-order central difference; the step is small relative to the
// weights so pruning choices do not flip.
inline Result check(const longmatch::TokenSequence& seq, longmatch::ModelWeights w,
                    const longmatch::ModelConfig& cfg, int label, double h = 1e-3) {
    const auto taped = longmatch::forward_taped(seq, w, cfg);
    auto grads = longmatch::ModelWeights::zeros(cfg);
    longmatch::backward(taped, w, taped.trace.p - label, grads);

    Result res;
    auto named_w = w.named_tensors();
    const auto named_g = std::as_const(grads).named_tensors();
    for (std::size_t k = 0; k < named_w.size(); ++k) {
        auto& t = *named_w[k].second;
        const auto& g = *named_g[k].second;
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double orig = t.data()[i];
            auto f = [&](double delta) {
                t.data()[i] = orig + delta;
                return loss_of(seq, w, cfg, label);
            };
            const double numeric = (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h);
            t.data()[i] = orig;
            const double analytic = g.data()[i];
            if (std::abs(numeric) < 1e-8 && std::abs(analytic) < 1e-8) continue;
            const double rel = std::abs(numeric - analytic) / std::max(std::abs(numeric), std::abs(analytic));
            ++res.compared;
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_tensor = named_w[k].first;
            }
        }
    }
    return res;
}

}  // namespace gradcheck
