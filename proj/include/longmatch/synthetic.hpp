#pragma once

// Planted-signal document pairs. Every document mixes a few "signal"
// sentences (tokens from one topic pool) with noise sentences (tokens from a
// shared noise pool plus stopwords). Positive pairs draw their signal from the
// same topic and share a fixed core of signal tokens; negative pairs use two
// different topics and therefore share no signal token.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace longmatch {

struct SyntheticTask {
    std::uint64_t seed = 1;
    std::size_t topics = 3;
    std::size_t topic_size = 8;          // signal tokens per topic
    std::size_t shared_signal = 4;       // k: signal tokens every positive pair shares
    std::size_t signal_sentences = 3;    // per document
    std::size_t noise_min = 6;           // noise sentences per document
    std::size_t noise_max = 18;
    std::size_t noise_pool = 300;
    std::size_t words_min = 5;           // content words per noise sentence
    std::size_t words_max = 9;
    std::size_t extra_signal_words = 1;  // topic words beyond the shared core
    std::size_t noise_words_in_signal = 6;

    void validate() const;
};

struct RawPair {
    std::string text_a;
    std::string text_b;
    int label = 0;
};

struct SyntheticData {
    std::vector<RawPair> train;
    std::vector<RawPair> dev;
    std::vector<std::string> signal_tokens;  // lowercase, as produced by tokenize
};

/// Balanced labels (first half positive before shuffling). Reproducible from
/// task.seed.
SyntheticData generate_synthetic(const SyntheticTask& task, std::size_t n_train, std::size_t n_dev);

std::string to_jsonl(const std::vector<RawPair>& pairs);
void write_jsonl(const std::filesystem::path& path, const std::vector<RawPair>& pairs);

}  // namespace longmatch
