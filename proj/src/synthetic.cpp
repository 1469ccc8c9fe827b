#include "longmatch/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "longmatch/errors.hpp"

namespace longmatch {
namespace {

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words = {"the", "of", "and", "a", "in", "to", "was",
                                                   "on", "with", "for", "that", "it", "by", "at"};
    return words;
}

std::string signal_word(std::size_t topic, std::size_t k) {
    return "t" + std::to_string(topic) + "w" + std::to_string(k);
}

std::string noise_word(std::size_t k) { return "n" + std::to_string(k); }

class Generator {
public:
    explicit Generator(const SyntheticTask& task) : task_(task), rng_(task.seed) {}

    std::size_t uniform(std::size_t lo, std::size_t hi) {  // inclusive
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }

    std::string sentence(std::vector<std::string> words) {
        const std::size_t fillers = uniform(1, 3);
        for (std::size_t i = 0; i < fillers; ++i)
            words.push_back(filler_words()[uniform(0, filler_words().size() - 1)]);
        std::shuffle(words.begin(), words.end(), rng_);
        std::string s;
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (i > 0) s += ' ';
            s += words[i];
        }
        s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return s + ".";
    }

    std::string noise_sentence() {
        std::vector<std::string> words;
        const std::size_t n = uniform(task_.words_min, task_.words_max);
        for (std::size_t i = 0; i < n; ++i) words.push_back(noise_word(uniform(0, task_.noise_pool - 1)));
        return sentence(std::move(words));
    }

    // Every signal sentence carries the whole core plus a few other topic words.
    std::string signal_sentence(std::size_t topic, const std::vector<std::size_t>& core) {
        std::vector<std::string> words;
        for (auto k : core) words.push_back(signal_word(topic, k));
        for (std::size_t i = 0; i < task_.extra_signal_words; ++i)
            words.push_back(signal_word(topic, uniform(0, task_.topic_size - 1)));
        for (std::size_t i = 0; i < task_.noise_words_in_signal; ++i)
            words.push_back(noise_word(uniform(0, task_.noise_pool - 1)));
        return sentence(std::move(words));
    }

    std::vector<std::size_t> core_for() {
        std::vector<std::size_t> all(task_.topic_size);
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        std::shuffle(all.begin(), all.end(), rng_);
        all.resize(task_.shared_signal);
        return all;
    }

    std::string document(std::size_t topic, const std::vector<std::size_t>& core) {
        const std::size_t noise = uniform(task_.noise_min, task_.noise_max);
        std::vector<std::string> sentences;
        for (std::size_t i = 0; i < noise; ++i) sentences.push_back(noise_sentence());
        for (std::size_t i = 0; i < task_.signal_sentences; ++i) {
            const std::size_t at = uniform(0, sentences.size());
            sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(at),
                             signal_sentence(topic, core));
        }
        std::string text;
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            if (i > 0) text += ' ';
            text += sentences[i];
        }
        return text;
    }

    RawPair pair(int label) {
        RawPair p;
        p.label = label;
        const std::size_t topic_a = uniform(0, task_.topics - 1);
        std::size_t topic_b = topic_a;
        if (label == 0) {
            topic_b = uniform(0, task_.topics - 2);
            if (topic_b >= topic_a) ++topic_b;
        }
        if (label == 1) {
            const auto core = core_for();
            p.text_a = document(topic_a, core);
            p.text_b = document(topic_b, core);
        } else {
            p.text_a = document(topic_a, core_for());
            p.text_b = document(topic_b, core_for());
        }
        return p;
    }

    std::vector<RawPair> split(std::size_t n) {
        std::vector<RawPair> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(pair(i < (n + 1) / 2 ? 1 : 0));
        std::shuffle(out.begin(), out.end(), rng_);
        return out;
    }

private:
    const SyntheticTask& task_;
    std::mt19937_64 rng_;
};

}  // namespace

void SyntheticTask::validate() const {
    if (topics < 2) throw ConfigError("synthetic task needs at least two topics");
    if (shared_signal < 1 || shared_signal > topic_size)
        throw ConfigError("shared_signal must lie in [1, topic_size]");
    if (noise_min > noise_max || words_min > words_max || words_min < 1)
        throw ConfigError("synthetic ranges must be non-empty");
    if (noise_pool < 1) throw ConfigError("noise pool must be non-empty");
    if (signal_sentences < 1) throw ConfigError("need at least one signal sentence");
}

SyntheticData generate_synthetic(const SyntheticTask& task, std::size_t n_train, std::size_t n_dev) {
    task.validate();
    Generator gen(task);
    SyntheticData out;
    out.train = gen.split(n_train);
    out.dev = gen.split(n_dev);
    for (std::size_t t = 0; t < task.topics; ++t)
        for (std::size_t k = 0; k < task.topic_size; ++k) out.signal_tokens.push_back(signal_word(t, k));
    return out;
}

std::string to_jsonl(const std::vector<RawPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        out += nlohmann::json{{"text_a", p.text_a}, {"text_b", p.text_b}, {"label", p.label}}.dump();
        out += '\n';
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<RawPair>& pairs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << to_jsonl(pairs);
}

}  // namespace longmatch
