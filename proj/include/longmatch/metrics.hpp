#pragma once

#include <cstddef>
#include <span>
#include <utility>

namespace longmatch {

struct Metrics {
    double accuracy = 0.0;
    double f1 = 0.0;
    std::size_t n_examples = 0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Predicted label is 1 iff p >= threshold. F1 of 0/0 is 0.
/// Throws InputError on empty input or p outside [0, 1].
Metrics compute_metrics(std::span<const std::pair<double, int>> predictions, double threshold = 0.5);

}  // namespace longmatch
