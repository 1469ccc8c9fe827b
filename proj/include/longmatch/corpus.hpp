#pragma once

// Dataset ingestion: sentence splitting, tokenization, stopword removal and
// vocabulary construction.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace longmatch {

struct Sentence {
    std::string doc_id;
    std::size_t index_in_doc = 0;
    std::string text;
    std::vector<std::string> tokens;
    std::vector<std::string> content_tokens;
};

struct Document {
    std::string id;
    std::string raw_text;
    std::vector<Sentence> sentences;
};

struct MatchExample {
    Document text_a;
    Document text_b;
    int label = 0;
};

using StopwordSet = std::unordered_set<std::string>;

struct SplitRules {
    // Lowercase words that may end with '.' without closing a sentence.
    std::unordered_set<std::string> abbreviations;
    // Treat a single letter followed by '.' as an initial ("J. Smith").
    bool single_letter_initials = true;

    static SplitRules defaults();
};

/// Splits text at '.', '!' or '?' followed by whitespace (or end of input).
/// Closing quotes and brackets directly after the terminator stay with the
/// sentence. Text without any terminator is a single sentence.
/// Throws EmptyDocument when the input is blank.
std::vector<std::string> split_sentence_texts(std::string_view raw_text,
                                              const SplitRules& rules = SplitRules::defaults());

/// Lowercased runs of letters/digits (bytes >= 0x80 count as letters so UTF-8
/// words stay whole); every other non-space character becomes its own token.
std::vector<std::string> tokenize(std::string_view sentence_text);

bool is_punctuation_token(std::string_view token);

/// Order-preserving filter dropping stopwords and punctuation tokens.
std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stopwords);

/// One lowercase word per line; '#' starts a comment.
StopwordSet load_stopwords(const std::filesystem::path& path);
StopwordSet parse_stopwords(std::string_view contents);
std::filesystem::path default_stopword_path();

std::vector<Sentence> split_sentences(std::string_view raw_text, const std::string& doc_id,
                                      const StopwordSet& stopwords,
                                      const SplitRules& rules = SplitRules::defaults());

Document make_document(std::string id, std::string raw_text, const StopwordSet& stopwords,
                       const SplitRules& rules = SplitRules::defaults());

/// JSON-lines with fields text_a, text_b, label (0/1). Blank lines are skipped
/// but still counted for error line numbers. Throws ParseError / LabelError /
/// EmptyDocument naming the 1-based line.
std::vector<MatchExample> load_dataset(const std::filesystem::path& path,
                                       const StopwordSet& stopwords,
                                       const SplitRules& rules = SplitRules::defaults());
std::vector<MatchExample> parse_dataset(std::string_view contents, const StopwordSet& stopwords,
                                        const SplitRules& rules = SplitRules::defaults());

class Vocab {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;
    static constexpr std::int32_t kCls = 2;
    static constexpr std::int32_t kSep = 3;
    static constexpr std::size_t kSpecialCount = 4;

    Vocab();
    /// Tokens must not repeat and must not collide with the special names.
    explicit Vocab(const std::vector<std::string>& regular_tokens);

    std::int32_t id(const std::string& token) const;  // kUnk when absent
    bool contains(const std::string& token) const;
    const std::string& token(std::int32_t id) const;
    std::size_t size() const { return id_to_token_.size(); }
    const std::vector<std::string>& tokens() const { return id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, std::int32_t> token_to_id_;
};

/// Counts model-input tokens (stopwords included) over both sides of every
/// example. Tokens with count >= min_freq get ids ordered by descending count
/// then lexicographically.
Vocab build_vocab(const std::vector<MatchExample>& examples, std::size_t min_freq);

}  // namespace longmatch
