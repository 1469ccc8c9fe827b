// longmatch: sentence filtering, training, matching and ablation sweeps.
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "longmatch/checkpoint.hpp"
#include "longmatch/corpus.hpp"
#include "longmatch/errors.hpp"
#include "longmatch/evaluation.hpp"
#include "longmatch/run_config.hpp"
#include "longmatch/sentence_filter.hpp"
#include "longmatch/synthetic.hpp"
#include "longmatch/training.hpp"

namespace fs = std::filesystem;
using namespace longmatch;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct GlobalFlags {
    std::optional<std::string> config;
    std::optional<std::size_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> output_dir;
    std::optional<std::string> stopwords;
    std::vector<std::string> overrides;
};

void require_file(const std::optional<fs::path>& path, const std::string& what) {
    if (!path) throw InputError("missing required " + what + " path");
    if (!fs::is_regular_file(*path)) throw InputError(what + " not found: " + path->string());
}

void ensure_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

StopwordSet stopwords_for(const RunConfig& cfg) {
    if (cfg.stopwords_path) return load_stopwords(*cfg.stopwords_path);
    return load_stopwords(default_stopword_path());
}

nlohmann::json pipeline_json(const RunConfig& cfg) {
    return {{"lambda", cfg.filter.lambda},
            {"sentence_iterations", cfg.filter.pagerank.iterations},
            {"damping", cfg.filter.pagerank.damping},
            {"united_graph", cfg.filter.united_graph}};
}

SentenceFilterParams filter_from_pipeline(const nlohmann::json& p, const RunConfig& cfg) {
    SentenceFilterParams f = cfg.filter;
    f.lambda = p.value("lambda", f.lambda);
    f.pagerank.iterations = p.value("sentence_iterations", f.pagerank.iterations);
    f.pagerank.damping = p.value("damping", f.pagerank.damping);
    f.united_graph = p.value("united_graph", f.united_graph);
    return f;
}

std::unordered_set<std::int32_t> signal_ids_for(const RunConfig& cfg, const Vocab& vocab) {
    std::unordered_set<std::int32_t> ids;
    if (!cfg.signal_tokens_path) return ids;
    require_file(cfg.signal_tokens_path, "signal token file");
    for (const auto& tok : load_stopwords(*cfg.signal_tokens_path))
        if (vocab.contains(tok)) ids.insert(vocab.id(tok));
    return ids;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- commands ---------------------------------------------------------------

int cmd_synth(const RunConfig& cfg) {
    ensure_output_dir(cfg.output_dir);
    const auto data = generate_synthetic(cfg.synthetic, cfg.synthetic_train, cfg.synthetic_dev);
    write_jsonl(cfg.output_dir / "train.jsonl", data.train);
    write_jsonl(cfg.output_dir / "dev.jsonl", data.dev);
    std::string tokens;
    for (const auto& t : data.signal_tokens) tokens += t + "\n";
    write_text(cfg.output_dir / "signal_tokens.txt", tokens);
    std::cout << "wrote " << data.train.size() << " train and " << data.dev.size()
              << " dev pairs to " << cfg.output_dir.string() << "\n";
    return 0;
}

int cmd_filter(const RunConfig& cfg, bool export_graph) {
    require_file(cfg.dataset_path, "input pair file");
    const auto stop = stopwords_for(cfg);
    ensure_output_dir(cfg.output_dir);
    const auto examples = load_dataset(*cfg.dataset_path, stop);
    if (export_graph) ensure_output_dir(cfg.output_dir / "graphs");

    std::ostringstream out;
    for (std::size_t k = 0; k < examples.size(); ++k) {
        const auto& ex = examples[k];
        const auto graph = build_sentence_graph(ex.text_a, ex.text_b, cfg.filter.united_graph,
                                                cfg.filter.workers);
        const auto pair = select_top_sentences(graph, cfg.filter.lambda, cfg.filter.pagerank);
        auto join = [](const std::vector<Sentence>& ss) {
            std::string s;
            for (std::size_t i = 0; i < ss.size(); ++i) s += (i ? " " : "") + ss[i].text;
            return s;
        };
        out << nlohmann::json{{"text_a", join(pair.selected_a)},
                              {"text_b", join(pair.selected_b)},
                              {"label", ex.label},
                              {"selected_a", pair.indices_a},
                              {"selected_b", pair.indices_b}}
                   .dump()
            << '\n';
        if (export_graph)
            write_text(cfg.output_dir / "graphs" / ("graph_" + std::to_string(k + 1) + ".json"),
                       graph_to_json(graph, pair.scores).dump(2) + "\n");
    }
    write_text(cfg.output_dir / "filtered.jsonl", out.str());
    std::cout << "filtered " << examples.size() << " pairs into "
              << (cfg.output_dir / "filtered.jsonl").string() << "\n";
    return 0;
}

struct LoadedSplits {
    Vocab vocab;
    std::vector<PreparedExample> train, dev;
};

LoadedSplits load_splits(RunConfig& cfg) {
    require_file(cfg.train_path, "training set");
    if (cfg.dev_path) require_file(cfg.dev_path, "dev set");
    const auto stop = stopwords_for(cfg);
    const auto train_raw = load_dataset(*cfg.train_path, stop);
    if (train_raw.empty()) throw InputError("training set is empty: " + cfg.train_path->string());
    const auto dev_raw = cfg.dev_path ? load_dataset(*cfg.dev_path, stop) : std::vector<MatchExample>{};
    LoadedSplits s{build_vocab(train_raw, std::max<std::size_t>(1, cfg.min_freq)), {}, {}};
    cfg.model.vocab_size = s.vocab.size();
    cfg.model.validate();
    s.train = prepare_examples(train_raw, s.vocab, cfg.filter, cfg.model.max_len);
    s.dev = prepare_examples(dev_raw, s.vocab, cfg.filter, cfg.model.max_len);
    return s;
}

int cmd_train(RunConfig cfg) {
    require_file(cfg.train_path, "training set");
    if (cfg.dev_path) require_file(cfg.dev_path, "dev set");
    ensure_output_dir(cfg.output_dir);
    auto splits = load_splits(cfg);

    const fs::path log_path = cfg.output_dir / "metrics.jsonl";
    fs::remove(log_path);
    TrainOptions opts;
    opts.forward.strategy = cfg.strategy;
    opts.metrics_log = log_path;
    opts.on_epoch = [](const EpochRecord& r) {
        std::printf("epoch %zu  train_loss=%.6f  dev_acc=%.4f  dev_f1=%.4f  (%.1fs)\n", r.epoch,
                    r.train_loss, r.dev_acc, r.dev_f1, r.seconds);
        std::fflush(stdout);
    };
    const auto result = train(splits.train, splits.dev, cfg.model, cfg.train, opts);

    Checkpoint ckpt{cfg.model, result.best_weights, splits.vocab, pipeline_json(cfg)};
    const fs::path ckpt_path = cfg.checkpoint_path.value_or(cfg.output_dir / "model.ckpt");
    save_checkpoint(ckpt_path, ckpt);
    std::cout << "best epoch " << result.best_epoch << "; checkpoint " << ckpt_path.string() << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    require_file(cfg.checkpoint_path, "checkpoint");
    require_file(cfg.dataset_path, "dataset");
    const auto ckpt = load_checkpoint(*cfg.checkpoint_path);
    const auto stop = stopwords_for(cfg);
    const auto raw = load_dataset(*cfg.dataset_path, stop);
    const auto examples = prepare_examples(raw, ckpt.vocab, filter_from_pipeline(ckpt.pipeline, cfg),
                                           ckpt.config.max_len);
    ForwardOptions fo;
    fo.strategy = cfg.strategy;
    const auto m = evaluate(examples, ckpt.weights, ckpt.config, fo, cfg.workers);
    const nlohmann::json out = {{"accuracy", std::stod(format_sig6(m.accuracy))},
                                {"f1", std::stod(format_sig6(m.f1))},
                                {"n", m.n_examples}, {"tp", m.tp}, {"fp", m.fp},
                                {"tn", m.tn}, {"fn", m.fn}};
    ensure_output_dir(cfg.output_dir);
    write_text(cfg.output_dir / "eval.json", out.dump(2) + "\n");
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_match(const RunConfig& cfg, const std::string& text_a, const std::string& text_b,
              const std::optional<std::string>& trace_path) {
    require_file(cfg.checkpoint_path, "checkpoint");
    require_file(fs::path(text_a), "text_a file");
    require_file(fs::path(text_b), "text_b file");
    const auto ckpt = load_checkpoint(*cfg.checkpoint_path);
    const auto stop = stopwords_for(cfg);
    const auto doc_a = make_document("a", read_text(text_a), stop);
    const auto doc_b = make_document("b", read_text(text_b), stop);
    const auto pair = filter_pair(doc_a, doc_b, filter_from_pipeline(ckpt.pipeline, cfg));
    const auto seq = assemble_sequence(pair, ckpt.vocab, ckpt.config.max_len);
    ForwardOptions fo;
    fo.strategy = cfg.strategy;
    const auto trace = forward(seq, ckpt.weights, ckpt.config, fo);
    std::printf("p=%.4f label=%d\n", trace.p, trace.p >= 0.5 ? 1 : 0);
    if (trace_path) {
        std::vector<std::string> text;
        for (auto id : seq.ids) text.push_back(ckpt.vocab.token(id));
        write_text(*trace_path, trace_to_json(trace, seq, text).dump(2) + "\n");
    }
    return 0;
}

int cmd_sweep(RunConfig cfg, const std::string& kind) {
    if (kind != "alpha" && kind != "strategy")
        throw InputError("unknown sweep kind '" + kind + "' (expected alpha or strategy)");
    require_file(cfg.train_path, "training set");
    if (cfg.dev_path) require_file(cfg.dev_path, "dev set");
    ensure_output_dir(cfg.output_dir);
    auto splits = load_splits(cfg);
    SweepData data{std::move(splits.train), std::move(splits.dev), signal_ids_for(cfg, splits.vocab)};

    std::string csv;
    nlohmann::json json;
    if (kind == "alpha") {
        TimingOptions timing;
        timing.batch_size = cfg.train.batch_size;
        timing.measured = std::max<std::size_t>(1, cfg.timing_batches);
        const auto rows = alpha_sweep(data, cfg.model, cfg.train, cfg.alphas, timing);
        csv = alpha_table_csv(rows);
        json = alpha_table_json(rows);
    } else {
        const auto rows = strategy_sweep(data, cfg.model, cfg.train, default_strategies(cfg.seed));
        csv = strategy_table_csv(rows);
        json = strategy_table_json(rows);
    }
    write_text(cfg.output_dir / ("sweep_" + kind + ".csv"), csv);
    write_text(cfg.output_dir / ("sweep_" + kind + ".json"), json.dump(2) + "\n");
    std::cout << csv;
    return 0;
}

int cmd_inspect(const RunConfig& cfg, std::size_t line) {
    require_file(cfg.dataset_path, "input pair file");
    std::optional<Checkpoint> ckpt;
    if (cfg.checkpoint_path) {
        require_file(cfg.checkpoint_path, "checkpoint");
        ckpt = load_checkpoint(*cfg.checkpoint_path);
    }
    const auto stop = stopwords_for(cfg);
    const auto examples = load_dataset(*cfg.dataset_path, stop);
    if (line < 1 || line > examples.size())
        throw InputError("pair " + std::to_string(line) + " out of range (file has " +
                         std::to_string(examples.size()) + ")");
    const auto& ex = examples[line - 1];
    const auto filter = ckpt ? filter_from_pipeline(ckpt->pipeline, cfg) : cfg.filter;
    const auto graph = build_sentence_graph(ex.text_a, ex.text_b, filter.united_graph, filter.workers);
    const auto pair = select_top_sentences(graph, filter.lambda, filter.pagerank);
    ensure_output_dir(cfg.output_dir);
    write_text(cfg.output_dir / "graph.json", graph_to_json(graph, pair.scores).dump(2) + "\n");
    std::cout << "wrote " << (cfg.output_dir / "graph.json").string() << "\n";
    if (ckpt) {
        const auto seq = assemble_sequence(pair, ckpt->vocab, ckpt->config.max_len);
        ForwardOptions fo;
        fo.strategy = cfg.strategy;
        const auto trace = forward(seq, ckpt->weights, ckpt->config, fo);
        std::vector<std::string> text;
        for (auto id : seq.ids) text.push_back(ckpt->vocab.token(id));
        write_text(cfg.output_dir / "trace.json", trace_to_json(trace, seq, text).dump(2) + "\n");
        std::cout << "wrote " << (cfg.output_dir / "trace.json").string() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-form text matching with sentence- and word-level PageRank filtering"};
    app.require_subcommand(1);
    GlobalFlags g;
    app.add_option("--config", g.config, "key=value configuration file");
    app.add_option("--seed", g.seed, "seed for initialization, shuffling and generators");
    app.add_option("--workers", g.workers, "worker threads where results stay schedule-independent");
    app.add_option("--output-dir", g.output_dir, "directory for all outputs");
    app.add_option("--stopwords", g.stopwords, "stopword file (one word per line)");
    app.add_option("--set", g.overrides, "override a config key: --set key=value");

    std::optional<std::string> train_path, dev_path, input_path, checkpoint_path, trace_path;
    std::string text_a, text_b, sweep_kind;
    bool export_graph = false;
    std::size_t inspect_line = 1;

    auto* synth = app.add_subcommand("synth", "generate the planted-signal synthetic task");
    auto* filter = app.add_subcommand("filter", "sentence-filter a JSONL pair file");
    filter->add_option("input", input_path, "JSONL pair file")->required();
    filter->add_flag("--export-graph", export_graph, "also write each sentence graph as JSON");
    auto* train_cmd = app.add_subcommand("train", "train a matcher");
    train_cmd->add_option("--train", train_path, "training JSONL");
    train_cmd->add_option("--dev", dev_path, "dev JSONL");
    train_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint output path");
    auto* eval_cmd = app.add_subcommand("evaluate", "score a labeled JSONL file");
    eval_cmd->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
    eval_cmd->add_option("dataset", input_path, "JSONL pair file");
    auto* match = app.add_subcommand("match", "score one document pair");
    match->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
    match->add_option("text_a", text_a, "first document (text file)")->required();
    match->add_option("text_b", text_b, "second document (text file)")->required();
    match->add_option("--trace", trace_path, "write the forward trace JSON here");
    auto* sweep = app.add_subcommand("sweep", "ablation sweeps");
    sweep->add_option("kind", sweep_kind, "alpha or strategy")->required();
    sweep->add_option("--train", train_path, "training JSONL");
    sweep->add_option("--dev", dev_path, "dev JSONL");
    auto* inspect = app.add_subcommand("inspect", "export sentence graph and word importance");
    inspect->add_option("input", input_path, "JSONL pair file")->required();
    inspect->add_option("--line", inspect_line, "1-based pair index in the file");
    inspect->add_option("--checkpoint", checkpoint_path, "trained checkpoint for the word trace");
    for (auto* sub : {synth, filter, train_cmd, eval_cmd, match, sweep, inspect}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        RunConfig cfg;
        if (g.config) {
            if (!fs::is_regular_file(*g.config)) throw InputError("config file not found: " + *g.config);
            cfg.load_file(*g.config);
        }
        for (const auto& kv : g.overrides) {
            const auto [k, v] = split_assignment(kv);
            cfg.set(k, v);
        }
        if (g.seed) cfg.set("seed", std::to_string(*g.seed));
        if (g.workers) cfg.set("workers", std::to_string(*g.workers));
        if (g.output_dir) cfg.output_dir = *g.output_dir;
        if (g.stopwords) cfg.stopwords_path = *g.stopwords;
        if (train_path) cfg.train_path = *train_path;
        if (dev_path) cfg.dev_path = *dev_path;
        if (input_path) cfg.dataset_path = *input_path;
        if (checkpoint_path) cfg.checkpoint_path = *checkpoint_path;
        if (cfg.stopwords_path) require_file(cfg.stopwords_path, "stopword file");

        if (*synth) return cmd_synth(cfg);
        if (*filter) return cmd_filter(cfg, export_graph);
        if (*train_cmd) return cmd_train(cfg);
        if (*eval_cmd) return cmd_evaluate(cfg);
        if (*match) return cmd_match(cfg, text_a, text_b, trace_path);
        if (*sweep) return cmd_sweep(cfg, sweep_kind);
        if (*inspect) return cmd_inspect(cfg, inspect_line);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInput;
}
