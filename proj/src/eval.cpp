#include "jasen/eval.hpp"

#include <algorithm>

namespace jasen {

std::vector<LabeledExample> parse_test_set(const std::vector<std::string>& lines,
                                           const TopicSchema& schema,
                                           const std::string& origin) {
    std::vector<LabeledExample> out;
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        auto at = [&](const std::string& what) -> ParseError {
            return ParseError(origin + ":" + std::to_string(i + 1) + ": " + what);
        };
        const size_t t2 = line.rfind('\t');
        if (t2 == std::string::npos) throw at("expected text<TAB>aspect<TAB>sentiment");
        const size_t t1 = line.rfind('\t', t2 - 1);
        if (t1 == std::string::npos || t2 == 0)
            throw at("expected text<TAB>aspect<TAB>sentiment");

        LabeledExample ex;
        ex.text = line.substr(0, t1);
        const std::string aspect = line.substr(t1 + 1, t2 - t1 - 1);
        const std::string sentiment = line.substr(t2 + 1);
        ex.gold_aspect = schema.aspect_index(aspect);
        if (ex.gold_aspect < 0) throw at("unknown aspect label \"" + aspect + "\"");
        ex.gold_sentiment = schema.sentiment_index(sentiment);
        if (ex.gold_sentiment < 0) throw at("unknown sentiment label \"" + sentiment + "\"");
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<LabeledExample> load_test_set(const std::string& path, const TopicSchema& schema) {
    return parse_test_set(read_lines(path), schema, path);
}

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> gold,
                        int n_classes) {
    if (predicted.size() != gold.size())
        throw ValidationError("compute_metrics: label sequences differ in length");
    if (predicted.empty()) throw ValidationError("compute_metrics: no examples");
    if (n_classes < 1) throw ValidationError("compute_metrics: need at least 1 class");

    std::vector<int64_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
    int64_t correct = 0;
    for (size_t i = 0; i < gold.size(); ++i) {
        const int p = predicted[i], g = gold[i];
        if (p < 0 || p >= n_classes || g < 0 || g >= n_classes)
            throw ValidationError("compute_metrics: label out of range");
        if (p == g) {
            ++correct;
            ++tp[p];
        } else {
            ++fp[p];
            ++fn[g];
        }
    }

    Metrics m;
    m.accuracy = static_cast<double>(correct) / gold.size();
    for (int c = 0; c < n_classes; ++c) {
        const double p = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fp[c]) : 0.0;
        const double r = tp[c] + fn[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fn[c]) : 0.0;
        const double f1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        m.macro_precision += p / n_classes;
        m.macro_recall += r / n_classes;
        m.macro_f1 += f1 / n_classes;
    }
    return m;
}

std::pair<Metrics, Metrics> evaluate_pipeline(const std::vector<LabeledExample>& test,
                                              const CnnModel& aspect_cnn,
                                              const CnnModel& sentiment_cnn,
                                              const Vocabulary& vocab, int aspect_fallback,
                                              int sentiment_fallback) {
    if (test.empty()) throw ValidationError("evaluate_pipeline: empty test set");
    std::vector<int> pred_a, pred_s, gold_a, gold_s;
    pred_a.reserve(test.size());

    for (const LabeledExample& ex : test) {
        Document doc = encode_document(tokenize(ex.text), vocab, 0);
        int a, s;
        if (doc.empty()) {
            a = aspect_fallback;
            s = sentiment_fallback;
        } else {
            auto amax = [](const std::vector<double>& q) {
                return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
            };
            a = amax(cnn_forward(aspect_cnn, doc.token_ids));
            s = amax(cnn_forward(sentiment_cnn, doc.token_ids));
        }
        pred_a.push_back(a);
        pred_s.push_back(s);
        gold_a.push_back(ex.gold_aspect);
        gold_s.push_back(ex.gold_sentiment);
    }
    return {compute_metrics(pred_a, gold_a, aspect_cnn.n_classes),
            compute_metrics(pred_s, gold_s, sentiment_cnn.n_classes)};
}

std::vector<SweepRow> keyword_sweep(const std::vector<std::string>& corpus_lines,
                                    const TopicSchema& schema,
                                    const std::vector<LabeledExample>& test,
                                    std::span<const int> ks, int min_count,
                                    const PipelineOptions& opts, const LogFn& log) {
    size_t shortest = SIZE_MAX;
    for (const auto& l : schema.aspect_keywords) shortest = std::min(shortest, l.size());
    for (const auto& l : schema.sentiment_keywords) shortest = std::min(shortest, l.size());
    for (int k : ks) {
        if (k < 1) throw ValidationError("keyword_sweep: k must be >= 1");
        if (static_cast<size_t>(k) > shortest)
            throw ValidationError("keyword_sweep: k=" + std::to_string(k) +
                                  " exceeds the shortest keyword list (" +
                                  std::to_string(shortest) + ")");
    }

    EncodedCorpus corpus = encode_corpus(corpus_lines, min_count);
    std::vector<SweepRow> rows;
    for (int k : ks) {
        TopicSchema truncated = schema;
        for (auto& l : truncated.aspect_keywords) l.resize(k);
        for (auto& l : truncated.sentiment_keywords) l.resize(k);

        if (log) log("stage=sweep k=" + std::to_string(k));
        PipelineResult r = run_pipeline(corpus, truncated, opts, log);
        auto [ma, ms] =
            evaluate_pipeline(test, r.aspect_cnn, r.sentiment_cnn, corpus.vocab,
                              r.aspect_pretrain.fallback_label,
                              r.sentiment_pretrain.fallback_label);
        rows.push_back({k, ma, ms});
    }
    return rows;
}

}  // namespace jasen
