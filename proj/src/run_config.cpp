#include "longmatch/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "longmatch/errors.hpp"

namespace longmatch {
namespace {

std::string trimmed(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("'" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys = {
        "lambda", "damping", "sentence_iterations", "iterations", "early_stop", "united_graph",
        "layers", "heads", "width", "ff_width", "max_len", "alpha", "learning_rate", "beta1",
        "beta2", "epsilon", "batch_size", "epochs", "seed", "min_freq", "workers", "strategy",
        "alphas", "timing_batches", "train", "dev", "dataset", "checkpoint", "output_dir",
        "stopwords", "signal_tokens", "synth_train", "synth_dev", "synth_topics",
        "synth_topic_size", "synth_shared", "synth_signal_sentences", "synth_noise_min",
        "synth_noise_max", "synth_noise_pool", "synth_noise_in_signal"};
    return keys;
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
    return {trimmed(text.substr(0, eq)), trimmed(text.substr(eq + 1))};
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "lambda") filter.lambda = to_size(key, value);
    else if (key == "damping") {
        filter.pagerank.damping = model.pagerank.damping = to_double(key, value);
    } else if (key == "sentence_iterations") filter.pagerank.iterations = to_size(key, value);
    else if (key == "iterations") model.pagerank.iterations = to_size(key, value);
    else if (key == "early_stop") model.pagerank.early_stop = to_double(key, value);
    else if (key == "united_graph") filter.united_graph = to_bool(key, value);
    else if (key == "layers") model.layers = to_size(key, value);
    else if (key == "heads") model.heads = to_size(key, value);
    else if (key == "width") model.width = to_size(key, value);
    else if (key == "ff_width") model.ff_width = to_size(key, value);
    else if (key == "max_len") model.max_len = to_size(key, value);
    else if (key == "alpha") model.alpha = to_double(key, value);
    else if (key == "learning_rate") train.learning_rate = to_double(key, value);
    else if (key == "beta1") train.beta1 = to_double(key, value);
    else if (key == "beta2") train.beta2 = to_double(key, value);
    else if (key == "epsilon") train.epsilon = to_double(key, value);
    else if (key == "batch_size") train.batch_size = to_size(key, value);
    else if (key == "epochs") train.epochs = to_size(key, value);
    else if (key == "seed") {
        seed = to_size(key, value);
        train.seed = model.init_seed = synthetic.seed = strategy.seed = seed;
    } else if (key == "min_freq") min_freq = to_size(key, value);
    else if (key == "workers") workers = filter.workers = std::max<std::size_t>(1, to_size(key, value));
    else if (key == "strategy") {
        const auto kind = parse_filter_kind(value);
        if (!kind) throw ConfigError("unknown strategy '" + value + "'");
        strategy.kind = *kind;
    } else if (key == "alphas") {
        alphas.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) alphas.push_back(to_double(key, trimmed(item)));
        if (alphas.empty()) throw ConfigError("'alphas' needs at least one value");
    } else if (key == "timing_batches") timing_batches = to_size(key, value);
    else if (key == "train") train_path = value;
    else if (key == "dev") dev_path = value;
    else if (key == "dataset") dataset_path = value;
    else if (key == "checkpoint") checkpoint_path = value;
    else if (key == "output_dir") output_dir = value;
    else if (key == "stopwords") stopwords_path = value;
    else if (key == "signal_tokens") signal_tokens_path = value;
    else if (key == "synth_train") synthetic_train = to_size(key, value);
    else if (key == "synth_dev") synthetic_dev = to_size(key, value);
    else if (key == "synth_topics") synthetic.topics = to_size(key, value);
    else if (key == "synth_topic_size") synthetic.topic_size = to_size(key, value);
    else if (key == "synth_shared") synthetic.shared_signal = to_size(key, value);
    else if (key == "synth_signal_sentences") synthetic.signal_sentences = to_size(key, value);
    else if (key == "synth_noise_min") synthetic.noise_min = to_size(key, value);
    else if (key == "synth_noise_max") synthetic.noise_max = to_size(key, value);
    else if (key == "synth_noise_pool") synthetic.noise_pool = to_size(key, value);
    else if (key == "synth_noise_in_signal") synthetic.noise_words_in_signal = to_size(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trimmed(line);
        if (line.empty()) continue;
        try {
            const auto [k, v] = split_assignment(line);
            set(k, v);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace longmatch
