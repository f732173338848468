#include "jasen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace jasen {

namespace {

// Word characters: ASCII alphanumerics plus any non-ASCII byte (UTF-8
// continuation bytes stay glued to their sequence).
bool is_word_char(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

bool has_word_char(std::string_view s) {
    for (unsigned char c : s)
        if (is_word_char(c)) return true;
    return false;
}

void emit_plain(std::string_view chunk, std::vector<std::string>& out) {
    size_t i = 0;
    while (i < chunk.size()) {
        while (i < chunk.size() && !is_word_char(chunk[i])) ++i;
        size_t start = i;
        while (i < chunk.size() && is_word_char(chunk[i])) ++i;
        if (i > start) out.emplace_back(chunk.substr(start, i - start));
    }
}

// Pre-mined phrase chunk: strip edge punctuation (keeping '#') and keep whole.
void emit_phrase(std::string_view chunk, std::vector<std::string>& out) {
    size_t b = 0, e = chunk.size();
    auto keep = [](unsigned char c) { return is_word_char(c) || c == '#'; };
    while (b < e && !keep(chunk[b])) ++b;
    while (e > b && !keep(chunk[e - 1])) --e;
    std::string_view core = chunk.substr(b, e - b);
    if (!core.empty() && has_word_char(core)) out.emplace_back(core);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw) {
    std::string lowered(raw);
    for (char& c : lowered)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    std::vector<std::string> out;
    size_t i = 0;
    std::string_view text(lowered);
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) continue;
        std::string_view chunk = text.substr(start, i - start);
        if (chunk.find("###") != std::string_view::npos)
            emit_phrase(chunk, out);
        else
            emit_plain(chunk, out);
    }
    return out;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& docs, int min_count) {
    if (min_count < 1) throw ValidationError("build_vocabulary: min_count must be >= 1");
    std::unordered_map<std::string, int64_t> freq;
    for (const auto& doc : docs)
        for (const auto& tok : doc) ++freq[tok];

    std::vector<std::pair<std::string, int64_t>> kept;
    kept.reserve(freq.size());
    for (auto& [tok, n] : freq)
        if (n >= min_count) kept.emplace_back(tok, n);
    if (kept.empty())
        throw Error("build_vocabulary: no token reaches min_count=" + std::to_string(min_count));

    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.tokens_.reserve(kept.size());
    v.counts_.reserve(kept.size());
    for (auto& [tok, n] : kept) {
        v.index_.emplace(tok, static_cast<int32_t>(v.tokens_.size()));
        v.tokens_.push_back(tok);
        v.counts_.push_back(n);
        v.total_ += n;
    }
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    v.tokens_ = std::move(tokens);
    v.counts_.assign(v.tokens_.size(), 0);
    for (int32_t i = 0; i < v.size(); ++i) v.index_.emplace(v.tokens_[i], i);
    return v;
}

Document encode_document(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                         int32_t doc_id) {
    Document d;
    d.doc_id = doc_id;
    d.token_ids.reserve(tokens.size());
    for (const auto& tok : tokens) {
        int32_t id = vocab.id_or(tok);
        if (id >= 0) d.token_ids.push_back(id);
    }
    return d;
}

int TopicSchema::aspect_index(std::string_view label) const {
    for (size_t i = 0; i < aspects.size(); ++i)
        if (aspects[i] == label) return static_cast<int>(i);
    return -1;
}

int TopicSchema::sentiment_index(std::string_view label) const {
    for (size_t i = 0; i < sentiments.size(); ++i)
        if (sentiments[i] == label) return static_cast<int>(i);
    return -1;
}

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& what) {
    throw ParseError(origin + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

TopicSchema parse_schema(const std::string& text, const std::string& origin) {
    TopicSchema schema;
    enum class Section { none, aspects, sentiments };
    Section section = Section::none;

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line == "[aspects]") {
            section = Section::aspects;
            continue;
        }
        if (line == "[sentiments]") {
            section = Section::sentiments;
            continue;
        }
        if (line.front() == '[')
            parse_fail(origin, lineno, "unknown section " + line);
        if (section == Section::none)
            parse_fail(origin, lineno, "expected [aspects] or [sentiments] before entries");

        size_t colon = line.find(':');
        if (colon == std::string::npos)
            parse_fail(origin, lineno, "expected \"label: kw1 kw2 ...\"");
        std::string label = trim(line.substr(0, colon));
        for (char& c : label) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (label.empty())
            parse_fail(origin, lineno, "empty label");
        if (label.find('|') != std::string::npos ||
            label.find_first_of(" \t") != std::string::npos)
            parse_fail(origin, lineno, "label must not contain '|' or whitespace: " + label);

        std::vector<std::string> kws = tokenize(line.substr(colon + 1));
        if (kws.empty())
            parse_fail(origin, lineno, "label \"" + label + "\" has an empty keyword list");

        auto& labels = section == Section::aspects ? schema.aspects : schema.sentiments;
        auto& lists = section == Section::aspects ? schema.aspect_keywords
                                                  : schema.sentiment_keywords;
        if (std::find(labels.begin(), labels.end(), label) != labels.end())
            parse_fail(origin, lineno, "duplicate label \"" + label + "\"");
        labels.push_back(label);
        lists.push_back(std::move(kws));
    }

    if (schema.n_aspects() < 2)
        throw ValidationError(origin + ": need at least 2 aspect labels, got " +
                              std::to_string(schema.n_aspects()));
    if (schema.n_sentiments() < 2)
        throw ValidationError(origin + ": need at least 2 sentiment labels, got " +
                              std::to_string(schema.n_sentiments()));
    return schema;
}

TopicSchema load_schema(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open schema file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_schema(buf.str(), path);
}

KeywordIds resolve_keywords(const TopicSchema& schema, const Vocabulary& vocab,
                            std::vector<std::string>* warnings) {
    KeywordIds ids;
    auto resolve = [&](const std::vector<std::string>& labels,
                       const std::vector<std::vector<std::string>>& lists,
                       const char* dim) {
        std::vector<std::vector<int32_t>> out;
        for (size_t i = 0; i < labels.size(); ++i) {
            std::vector<int32_t> kw;
            for (const auto& tok : lists[i]) {
                int32_t id = vocab.id_or(tok);
                if (id >= 0) {
                    kw.push_back(id);
                } else if (warnings) {
                    warnings->push_back("keyword \"" + tok + "\" of " + dim + " \"" +
                                        labels[i] + "\" is not in the vocabulary; dropped");
                }
            }
            if (kw.empty())
                throw Error("every keyword of " + std::string(dim) + " \"" + labels[i] +
                            "\" is out of vocabulary");
            out.push_back(std::move(kw));
        }
        return out;
    };
    ids.aspect = resolve(schema.aspects, schema.aspect_keywords, "aspect");
    ids.sentiment = resolve(schema.sentiments, schema.sentiment_keywords, "sentiment");
    return ids;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

EncodedCorpus encode_corpus(const std::vector<std::string>& lines, int min_count) {
    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(lines.size());
    for (const auto& line : lines) tokenized.push_back(tokenize(line));

    EncodedCorpus corpus;
    corpus.vocab = Vocabulary::build(tokenized, min_count);
    corpus.docs.reserve(tokenized.size());
    for (size_t i = 0; i < tokenized.size(); ++i)
        corpus.docs.push_back(
            encode_document(tokenized[i], corpus.vocab, static_cast<int32_t>(i)));
    return corpus;
}

}  // namespace jasen
