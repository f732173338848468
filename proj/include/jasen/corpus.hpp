#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jasen/error.hpp"

namespace jasen {

// Lowercases, splits on whitespace and punctuation boundaries, drops
// pure-punctuation tokens. Chunks containing "###" (pre-mined phrases) are
// kept as single tokens with only edge punctuation stripped.
std::vector<std::string> tokenize(std::string_view raw);

class Vocabulary {
public:
    Vocabulary() = default;

    // Tokens with corpus frequency >= min_count, ordered by descending count,
    // ties broken lexicographically. Throws Error when nothing survives.
    static Vocabulary build(const std::vector<std::vector<std::string>>& docs, int min_count);

    // Rebuild from an id-ordered token list (e.g. a serialized model); counts
    // are unknown and read back as zero.
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    int32_t size() const { return static_cast<int32_t>(tokens_.size()); }
    const std::string& token(int32_t id) const { return tokens_[id]; }
    int64_t count(int32_t id) const { return counts_[id]; }
    int64_t total_count() const { return total_; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    int32_t id_or(std::string_view tok, int32_t fallback = -1) const {
        auto it = index_.find(std::string(tok));
        return it == index_.end() ? fallback : it->second;
    }
    bool contains(std::string_view tok) const { return id_or(tok) >= 0; }

private:
    std::vector<std::string> tokens_;
    std::vector<int64_t> counts_;
    std::unordered_map<std::string, int32_t> index_;
    int64_t total_ = 0;
};

inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs,
                                   int min_count) {
    return Vocabulary::build(docs, min_count);
}

struct Document {
    int32_t doc_id = 0;
    std::vector<int32_t> token_ids;
    bool empty() const { return token_ids.empty(); }
};

// Out-of-vocabulary tokens are dropped; order preserved. A document that ends
// up empty is a valid (flagged) result, not an error.
Document encode_document(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                         int32_t doc_id);

struct TopicSchema {
    std::vector<std::string> aspects;
    std::vector<std::string> sentiments;
    std::vector<std::vector<std::string>> aspect_keywords;     // parallel to aspects
    std::vector<std::vector<std::string>> sentiment_keywords;  // parallel to sentiments

    int n_aspects() const { return static_cast<int>(aspects.size()); }
    int n_sentiments() const { return static_cast<int>(sentiments.size()); }
    int n_joint() const { return n_aspects() * n_sentiments(); }

    int aspect_index(std::string_view label) const;     // -1 when absent
    int sentiment_index(std::string_view label) const;  // -1 when absent
    std::string joint_name(int s, int a) const { return sentiments[s] + "|" + aspects[a]; }
};

// Format: "[aspects]" / "[sentiments]" section headers, then "label: kw1 kw2 ..."
// lines; '#' starts a comment line. Keywords run through tokenize().
TopicSchema parse_schema(const std::string& text, const std::string& origin = "schema");
TopicSchema load_schema(const std::string& path);

enum class TopicDim { aspect, sentiment };

// Vocabulary ids of in-vocabulary keywords, parallel to schema label order.
// OOV keywords are dropped with a warning; a label losing its whole list is a
// hard error since topic initialization would be undefined.
struct KeywordIds {
    std::vector<std::vector<int32_t>> aspect;
    std::vector<std::vector<int32_t>> sentiment;
};
KeywordIds resolve_keywords(const TopicSchema& schema, const Vocabulary& vocab,
                            std::vector<std::string>* warnings = nullptr);

// One review per line, UTF-8.
std::vector<std::string> read_lines(const std::string& path);

struct EncodedCorpus {
    Vocabulary vocab;
    std::vector<Document> docs;  // one per input line, possibly empty-flagged
};
EncodedCorpus encode_corpus(const std::vector<std::string>& lines, int min_count);

}  // namespace jasen
