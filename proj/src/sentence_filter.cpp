#include "longmatch/sentence_filter.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_set>

#include "longmatch/errors.hpp"

namespace longmatch {

double sentence_similarity(const Sentence& a, const Sentence& b) {
    const std::size_t na = a.content_tokens.size();
    const std::size_t nb = b.content_tokens.size();
    if (na <= 1 || nb <= 1) return 0.0;
    const std::unordered_set<std::string> in_a(a.content_tokens.begin(), a.content_tokens.end());
    std::unordered_set<std::string> shared;
    for (const auto& w : b.content_tokens)
        if (in_a.count(w) > 0) shared.insert(w);
    if (shared.empty()) return 0.0;
    return static_cast<double>(shared.size()) /
           (std::log(static_cast<double>(na)) + std::log(static_cast<double>(nb)));
}

SentenceGraph build_sentence_graph(const Document& doc_a, const Document& doc_b, bool united,
                                   std::size_t workers) {
    if (doc_a.sentences.empty() || doc_b.sentences.empty()) throw EmptyDocument();
    SentenceGraph g;
    g.size_a = doc_a.sentences.size();
    g.size_b = doc_b.sentences.size();
    g.nodes.reserve(g.size_a + g.size_b);
    for (const auto& s : doc_a.sentences) {
        g.nodes.push_back(s);
        g.origin.push_back(Origin::A);
    }
    for (const auto& s : doc_b.sentences) {
        g.nodes.push_back(s);
        g.origin.push_back(Origin::B);
    }
    const std::size_t n = g.nodes.size();
    g.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

    // Each worker owns a disjoint set of rows (upper triangle), so the result
    // does not depend on the schedule.
    auto fill_rows = [&](std::size_t first) {
        for (std::size_t i = first; i < n; i += std::max<std::size_t>(workers, 1)) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!united && g.origin[i] != g.origin[j]) continue;
                g.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    sentence_similarity(g.nodes[i], g.nodes[j]);
            }
        }
    };
    if (workers <= 1) {
        fill_rows(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(fill_rows, w);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            g.weights(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                g.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return g;
}

FilteredPair select_top_sentences(const SentenceGraph& graph, std::size_t lambda,
                                  const PageRankParams& params) {
    if (lambda == 0) throw ConfigError("lambda must be >= 1");
    Eigen::MatrixXd transition = graph.weights;
    for (Eigen::Index j = 0; j < transition.cols(); ++j) {
        const double sum = transition.col(j).sum();
        if (sum > 0.0) transition.col(j) /= sum;
    }
    FilteredPair out;
    out.scores = pagerank(validate_stochastic(transition), params);

    const auto order = rank_order(out.scores);
    std::vector<std::size_t> picked_a, picked_b;
    const std::size_t want_a = std::min(lambda, graph.size_a);
    const std::size_t want_b = std::min(lambda, graph.size_b);
    for (std::size_t node : order) {
        if (graph.origin[node] == Origin::A) {
            if (picked_a.size() < want_a) picked_a.push_back(node);
        } else if (picked_b.size() < want_b) {
            picked_b.push_back(node);
        }
    }
    std::sort(picked_a.begin(), picked_a.end());
    std::sort(picked_b.begin(), picked_b.end());
    for (std::size_t node : picked_a) {
        out.selected_a.push_back(graph.nodes[node]);
        out.indices_a.push_back(graph.nodes[node].index_in_doc);
    }
    for (std::size_t node : picked_b) {
        out.selected_b.push_back(graph.nodes[node]);
        out.indices_b.push_back(graph.nodes[node].index_in_doc);
    }
    return out;
}

FilteredPair filter_pair(const Document& doc_a, const Document& doc_b,
                         const SentenceFilterParams& params) {
    const auto graph = build_sentence_graph(doc_a, doc_b, params.united_graph, params.workers);
    return select_top_sentences(graph, params.lambda, params.pagerank);
}

TokenSequence assemble_sequence(const FilteredPair& pair, const Vocab& vocab, std::size_t max_len) {
    if (max_len < 4) throw SequenceTooShort(max_len);
    std::vector<std::int32_t> a, b;
    for (const auto& s : pair.selected_a)
        for (const auto& t : s.tokens) a.push_back(vocab.id(t));
    for (const auto& s : pair.selected_b)
        for (const auto& t : s.tokens) b.push_back(vocab.id(t));

    const std::size_t budget = max_len - 3;
    while (a.size() + b.size() > budget) {
        if (a.size() > b.size())
            a.pop_back();
        else
            b.pop_back();
    }

    TokenSequence seq;
    seq.ids.reserve(a.size() + b.size() + 3);
    seq.ids.push_back(Vocab::kCls);
    seq.ids.insert(seq.ids.end(), a.begin(), a.end());
    seq.ids.push_back(Vocab::kSep);
    seq.ids.insert(seq.ids.end(), b.begin(), b.end());
    seq.ids.push_back(Vocab::kSep);
    seq.protected_mask.assign(seq.ids.size(), false);
    seq.protected_mask.front() = true;
    seq.protected_mask[a.size() + 1] = true;
    seq.protected_mask.back() = true;
    return seq;
}

nlohmann::json graph_to_json(const SentenceGraph& graph, const PageRankScores& scores) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        nodes.push_back({{"doc", graph.origin[i] == Origin::A ? "A" : "B"},
                         {"index", graph.nodes[i].index_in_doc},
                         {"text", graph.nodes[i].text},
                         {"score", scores.u(static_cast<Eigen::Index>(i))}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (Eigen::Index i = 0; i < graph.weights.rows(); ++i)
        for (Eigen::Index j = i + 1; j < graph.weights.cols(); ++j)
            if (graph.weights(i, j) != 0.0)
                edges.push_back({{"i", i}, {"j", j}, {"weight", graph.weights(i, j)}});
    return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

}  // namespace longmatch
