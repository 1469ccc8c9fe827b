#pragma once

// Flat key=value run configuration shared by every CLI command.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "longmatch/importance.hpp"
#include "longmatch/sentence_filter.hpp"
#include "longmatch/synthetic.hpp"
#include "longmatch/training.hpp"
#include "longmatch/transformer.hpp"

namespace longmatch {

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    SentenceFilterParams filter;
    SyntheticTask synthetic;
    std::size_t synthetic_train = 1000;
    std::size_t synthetic_dev = 200;
    std::size_t min_freq = 1;
    std::size_t workers = 1;
    std::uint64_t seed = 1;
    FilterStrategy strategy{};
    std::vector<double> alphas{0.0, 0.05, 0.1, 0.2};
    std::size_t timing_batches = 50;

    std::optional<std::filesystem::path> train_path, dev_path, dataset_path, checkpoint_path,
        stopwords_path, signal_tokens_path;
    std::filesystem::path output_dir = ".";

    /// Throws ConfigError for unknown keys or malformed values.
    void set(const std::string& key, const std::string& value);
    /// Lines of key=value; blank lines and '#' comments ignored.
    void load_file(const std::filesystem::path& path);

    static const std::vector<std::string>& known_keys();
};

/// Parses "key=value" into its parts; throws ConfigError without '='.
std::pair<std::string, std::string> split_assignment(const std::string& text);

}  // namespace longmatch
