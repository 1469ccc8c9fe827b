#include "longmatch/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "longmatch/errors.hpp"

namespace longmatch {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_word_byte(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) != 0;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}'; }

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

// Word immediately before position `dot` (exclusive), stripped of leading
// opening punctuation.
std::string_view word_before(std::string_view text, std::size_t dot) {
    std::size_t begin = dot;
    while (begin > 0 && !is_space(text[begin - 1])) --begin;
    std::string_view w = text.substr(begin, dot - begin);
    while (!w.empty() && !is_word_byte(w.front())) w.remove_prefix(1);
    return w;
}

bool is_guarded(std::string_view text, std::size_t dot, const SplitRules& rules) {
    const std::string_view w = word_before(text, dot);
    if (w.empty()) return false;
    if (rules.single_letter_initials && w.size() == 1 &&
        std::isupper(static_cast<unsigned char>(w[0])) && w[0] != 'I')
        return true;
    return rules.abbreviations.count(lower(w)) > 0;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Document document_from_line(const nlohmann::json& obj, const char* field, std::string id,
                            std::size_t line, const StopwordSet& stopwords,
                            const SplitRules& rules) {
    if (!obj.contains(field) || !obj[field].is_string())
        throw ParseError(line, std::string("missing string field '") + field + "'");
    try {
        return make_document(std::move(id), obj[field].get<std::string>(), stopwords, rules);
    } catch (const EmptyDocument&) {
        throw EmptyDocument(line);
    }
}

}  // namespace

SplitRules SplitRules::defaults() {
    SplitRules r;
    r.abbreviations = {"mr",  "mrs", "ms",  "dr",  "prof", "sr",  "jr",   "st",  "vs",
                       "e.g", "i.e", "etc", "fig", "inc", "ltd",  "co",  "corp",
                       "jan", "feb", "mar", "apr", "jun",  "jul", "aug",  "sep", "sept",
                       "oct", "nov", "dec", "u.s", "u.k",  "al",  "approx", "dept", "gen",
                       "gov", "sen", "rep", "eq",  "vol",  "pp",  "ph.d", "mt", "a.m", "p.m"};
    return r;
}

std::vector<std::string> split_sentence_texts(std::string_view raw_text, const SplitRules& rules) {
    if (trim(raw_text).empty()) throw EmptyDocument();

    std::vector<std::string> out;
    std::size_t start = 0;
    std::size_t i = 0;
    const std::size_t n = raw_text.size();
    while (i < n) {
        if (!is_terminator(raw_text[i])) {
            ++i;
            continue;
        }
        const std::size_t first = i;
        while (i < n && is_terminator(raw_text[i])) ++i;
        const bool lone_period = (i - first == 1 && raw_text[first] == '.');
        while (i < n && is_closer(raw_text[i])) ++i;
        if (i < n && !is_space(raw_text[i])) continue;
        if (lone_period && is_guarded(raw_text, first, rules)) continue;
        const std::string_view piece = trim(raw_text.substr(start, i - start));
        if (!piece.empty()) out.emplace_back(piece);
        start = i;
    }
    const std::string_view tail = trim(raw_text.substr(std::min(start, n)));
    if (!tail.empty()) out.emplace_back(tail);
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (is_space(c)) {
            ++i;
        } else if (is_word_byte(c)) {
            std::size_t j = i;
            while (j < text.size() && is_word_byte(text[j])) ++j;
            out.push_back(lower(text.substr(i, j - i)));
            i = j;
        } else {
            out.emplace_back(1, c);
            ++i;
        }
    }
    return out;
}

bool is_punctuation_token(std::string_view token) {
    return std::none_of(token.begin(), token.end(), is_word_byte);
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stopwords) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (is_punctuation_token(t) || stopwords.count(t) > 0) continue;
        out.push_back(t);
    }
    return out;
}

StopwordSet parse_stopwords(std::string_view contents) {
    StopwordSet words;
    std::istringstream in{std::string(contents)};
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string_view w = trim(line);
        if (!w.empty()) words.insert(lower(w));
    }
    return words;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
    return parse_stopwords(read_file(path));
}

std::filesystem::path default_stopword_path() {
    return std::filesystem::path(LONGMATCH_DATA_DIR) / "stopwords_en.txt";
}

std::vector<Sentence> split_sentences(std::string_view raw_text, const std::string& doc_id,
                                      const StopwordSet& stopwords, const SplitRules& rules) {
    std::vector<Sentence> out;
    for (auto& text : split_sentence_texts(raw_text, rules)) {
        Sentence s;
        s.doc_id = doc_id;
        s.index_in_doc = out.size();
        s.tokens = tokenize(text);
        s.content_tokens = remove_stopwords(s.tokens, stopwords);
        s.text = std::move(text);
        out.push_back(std::move(s));
    }
    return out;
}

Document make_document(std::string id, std::string raw_text, const StopwordSet& stopwords,
                       const SplitRules& rules) {
    Document d;
    d.sentences = split_sentences(raw_text, id, stopwords, rules);
    d.id = std::move(id);
    d.raw_text = std::move(raw_text);
    return d;
}

std::vector<MatchExample> parse_dataset(std::string_view contents, const StopwordSet& stopwords,
                                        const SplitRules& rules) {
    std::vector<MatchExample> out;
    std::istringstream in{std::string(contents)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
        if (!obj.contains("label") || !obj["label"].is_number_integer())
            throw ParseError(line_no, "missing integer field 'label'");
        const auto label = obj["label"].get<long long>();
        if (label != 0 && label != 1) throw LabelError(line_no, label);

        std::string base = "L" + std::to_string(line_no);
        if (obj.contains("id") && obj["id"].is_string()) base = obj["id"].get<std::string>();
        MatchExample ex;
        ex.text_a = document_from_line(obj, "text_a", base + ":a", line_no, stopwords, rules);
        ex.text_b = document_from_line(obj, "text_b", base + ":b", line_no, stopwords, rules);
        ex.label = static_cast<int>(label);
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<MatchExample> load_dataset(const std::filesystem::path& path,
                                       const StopwordSet& stopwords, const SplitRules& rules) {
    return parse_dataset(read_file(path), stopwords, rules);
}

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(const std::vector<std::string>& regular_tokens) {
    id_to_token_ = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    id_to_token_.insert(id_to_token_.end(), regular_tokens.begin(), regular_tokens.end());
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
        if (!token_to_id_.emplace(id_to_token_[i], static_cast<std::int32_t>(i)).second)
            throw InputError("duplicate vocabulary token '" + id_to_token_[i] + "'");
    }
}

std::int32_t Vocab::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const { return token_to_id_.count(token) > 0; }

const std::string& Vocab::token(std::int32_t id) const {
    return id_to_token_.at(static_cast<std::size_t>(id));
}

Vocab build_vocab(const std::vector<MatchExample>& examples, std::size_t min_freq) {
    if (min_freq == 0) throw InputError("min_freq must be >= 1");
    std::map<std::string, std::size_t> counts;
    for (const auto& ex : examples)
        for (const Document* doc : {&ex.text_a, &ex.text_b})
            for (const auto& s : doc->sentences)
                for (const auto& t : s.tokens) ++counts[t];

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [tok, c] : counts)
        if (c >= min_freq) kept.emplace_back(tok, c);
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    tokens.reserve(kept.size());
    for (auto& [tok, c] : kept) tokens.push_back(tok);
    return Vocab(tokens);
}

}  // namespace longmatch
