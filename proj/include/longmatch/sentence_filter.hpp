#pragma once

// Sentence-level noise filter: a similarity graph over the pooled sentences
// of both documents, ranked with PageRank, keeping the top lambda per side.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "longmatch/corpus.hpp"
#include "longmatch/pagerank.hpp"
#include "longmatch/token_sequence.hpp"

namespace longmatch {

enum class Origin { A, B };

struct SentenceGraph {
    std::vector<Sentence> nodes;  // all of document A, then all of document B
    std::vector<Origin> origin;
    Eigen::MatrixXd weights;  // symmetric, zero diagonal
    std::size_t size_a = 0;
    std::size_t size_b = 0;
};

struct FilteredPair {
    std::vector<Sentence> selected_a;  // original document order
    std::vector<Sentence> selected_b;
    std::vector<std::size_t> indices_a;  // index_in_doc of each selected sentence
    std::vector<std::size_t> indices_b;
    PageRankScores scores;  // over all graph nodes
};

struct SentenceFilterParams {
    std::size_t lambda = 5;
    PageRankParams pagerank{0.85, 100, std::nullopt};
    // false zeroes the cross-document block, i.e. ranks each text on its own.
    bool united_graph = true;
    std::size_t workers = 1;
};

/// Distinct shared content words over ln|s_i| + ln|s_j| (|s| counts content
/// tokens). Zero when either side has at most one content token.
double sentence_similarity(const Sentence& a, const Sentence& b);

SentenceGraph build_sentence_graph(const Document& doc_a, const Document& doc_b,
                                   bool united = true, std::size_t workers = 1);

/// Column-normalizes the weights (zero columns become dangling), runs
/// PageRank and keeps the min(lambda, L) best sentences of each document.
FilteredPair select_top_sentences(const SentenceGraph& graph, std::size_t lambda,
                                  const PageRankParams& params);

FilteredPair filter_pair(const Document& doc_a, const Document& doc_b,
                         const SentenceFilterParams& params);

/// Frames the sequence and trims it to max_len, always dropping the trailing
/// token of the longer side (side B on ties). Throws SequenceTooShort when
/// max_len < 4.
TokenSequence assemble_sequence(const FilteredPair& pair, const Vocab& vocab, std::size_t max_len);

/// {nodes:[{doc, index, text, score}], edges:[{i, j, weight}]}, edges i < j
/// with nonzero weight.
nlohmann::json graph_to_json(const SentenceGraph& graph, const PageRankScores& scores);

}  // namespace longmatch
