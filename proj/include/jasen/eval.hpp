#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jasen/corpus.hpp"
#include "jasen/textcnn.hpp"
#include "jasen/training.hpp"

namespace jasen {

struct LabeledExample {
    std::string text;
    int gold_aspect = 0;
    int gold_sentiment = 0;
};

// Lines of "text<TAB>aspect<TAB>sentiment"; labels must exist in the schema.
// The two label columns are split off the right, so the text may contain tabs.
std::vector<LabeledExample> parse_test_set(const std::vector<std::string>& lines,
                                           const TopicSchema& schema,
                                           const std::string& origin = "test-set");
std::vector<LabeledExample> load_test_set(const std::string& path, const TopicSchema& schema);

struct Metrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// Standard per-class precision/recall/F1 with empty denominators scored 0,
// macro-averaged over ALL classes in [0, n_classes).
Metrics compute_metrics(std::span<const int> predicted, std::span<const int> gold,
                        int n_classes);

// CNN argmax labels per head; documents empty after tokenization and OOV
// filtering fall back to the given majority pseudo-labels.
std::pair<Metrics, Metrics> evaluate_pipeline(const std::vector<LabeledExample>& test,
                                              const CnnModel& aspect_cnn,
                                              const CnnModel& sentiment_cnn,
                                              const Vocabulary& vocab, int aspect_fallback,
                                              int sentiment_fallback);

struct SweepRow {
    int k;
    Metrics aspect;
    Metrics sentiment;
};

// Truncates every keyword list to its first k entries and reruns the whole
// pipeline per k. Each k must be >= 1 and <= the shortest keyword list.
std::vector<SweepRow> keyword_sweep(const std::vector<std::string>& corpus_lines,
                                    const TopicSchema& schema,
                                    const std::vector<LabeledExample>& test,
                                    std::span<const int> ks, int min_count,
                                    const PipelineOptions& opts, const LogFn& log = {});

}  // namespace jasen
