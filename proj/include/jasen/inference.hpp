#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "jasen/embedding.hpp"

namespace jasen {

// Mean of the center vectors of the document's tokens. Throws Error on an
// empty document; callers decide the fallback.
std::vector<double> document_vector(const EmbeddingModel& model,
                                    std::span<const int32_t> token_ids);

// How topic/document cosines combine into class scores. `combined` (marginal
// plus mean joint cosine) is the default; the other two exist for ablations.
enum class ScoringVariant { combined, joint_only, marginal_only };
ScoringVariant parse_scoring(std::string_view name);  // "combined" | "joint-only" | "marginal-only"
std::string to_string(ScoringVariant v);

struct SoftPrediction {
    std::vector<double> aspect_dist;
    std::vector<double> sentiment_dist;
    int aspect() const;     // argmax; ties go to the lower index
    int sentiment() const;
};

// Aspect logit = T * (cos(t_a, d) + mean_s cos(t_<s,a>, d)), softmaxed;
// sentiments symmetric. Throws on T <= 0 and on a zero-norm document vector.
SoftPrediction embed_predict(const EmbeddingModel& model, std::span<const int32_t> token_ids,
                             double temperature,
                             ScoringVariant variant = ScoringVariant::combined);

struct TopicRef {
    enum class Kind { aspect, sentiment, joint };
    Kind kind = Kind::aspect;
    int s = -1;  // sentiment index (sentiment and joint kinds)
    int a = -1;  // aspect index (aspect and joint kinds)
};

// Accepts an aspect label, a sentiment label, or "sentiment|aspect". A label
// used in both dimensions resolves as an aspect. Unknown names raise
// ValidationError listing every valid topic.
TopicRef resolve_topic(const TopicSchema& schema, std::string_view name);
std::string topic_name(const TopicSchema& schema, const TopicRef& ref);
std::span<const double> topic_vector(const EmbeddingModel& model, const TopicRef& ref);

struct ScoredTerm {
    std::string token;
    double score;  // cosine to the topic vector
};

// Top-n vocabulary tokens by cosine to the topic vector; seed keywords are not
// excluded; exact score ties break by token id.
std::vector<ScoredTerm> top_terms(const EmbeddingModel& model, const Vocabulary& vocab,
                                  const TopicRef& ref, int n);

struct ProjectedPoint {
    std::string name;
    double x, y;
};

// Top-2 principal components of the mean-centered topic matrix (pure aspect,
// pure sentiment, then joint rows), eigenvectors found by power iteration with
// deflation. Rank-deficient input zeroes the second coordinate and sets
// *warning when given.
std::vector<ProjectedPoint> project_topics_2d(const EmbeddingModel& model,
                                              std::string* warning = nullptr);

}  // namespace jasen
