#include "jasen/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jasen/rng.hpp"

namespace jasen {

std::vector<double> document_vector(const EmbeddingModel& model,
                                    std::span<const int32_t> token_ids) {
    if (token_ids.empty()) throw Error("document_vector: empty document");
    std::vector<double> d(model.dim, 0.0);
    for (int32_t id : token_ids) axpy(1.0 / token_ids.size(), model.center.row(id), d);
    return d;
}

ScoringVariant parse_scoring(std::string_view name) {
    if (name == "combined") return ScoringVariant::combined;
    if (name == "joint-only") return ScoringVariant::joint_only;
    if (name == "marginal-only") return ScoringVariant::marginal_only;
    throw ValidationError("unknown scoring variant \"" + std::string(name) +
                          "\"; expected combined, joint-only or marginal-only");
}

std::string to_string(ScoringVariant v) {
    switch (v) {
        case ScoringVariant::combined: return "combined";
        case ScoringVariant::joint_only: return "joint-only";
        case ScoringVariant::marginal_only: return "marginal-only";
    }
    return "combined";
}

namespace {

int argmax_low(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace

int SoftPrediction::aspect() const { return argmax_low(aspect_dist); }
int SoftPrediction::sentiment() const { return argmax_low(sentiment_dist); }

SoftPrediction embed_predict(const EmbeddingModel& model, std::span<const int32_t> token_ids,
                             double temperature, ScoringVariant variant) {
    if (temperature <= 0.0) throw ValidationError("temperature must be > 0");
    std::vector<double> d = document_vector(model, token_ids);
    if (norm2(d) == 0.0) throw Error("embed_predict: document vector has zero norm");

    const int n_a = model.schema.n_aspects();
    const int n_s = model.schema.n_sentiments();

    std::vector<double> joint_cos(n_s * n_a);
    for (int s = 0; s < n_s; ++s)
        for (int a = 0; a < n_a; ++a)
            joint_cos[model.joint_row(s, a)] = cosine(model.joint_topics.row(model.joint_row(s, a)), d);

    const bool use_marginal = variant != ScoringVariant::joint_only;
    const bool use_joint = variant != ScoringVariant::marginal_only;

    SoftPrediction out;
    out.aspect_dist.resize(n_a);
    for (int a = 0; a < n_a; ++a) {
        double score = 0.0;
        if (use_marginal) score += cosine(model.aspect_topics.row(a), d);
        if (use_joint) {
            double m = 0.0;
            for (int s = 0; s < n_s; ++s) m += joint_cos[model.joint_row(s, a)];
            score += m / n_s;
        }
        out.aspect_dist[a] = temperature * score;
    }
    softmax_inplace(out.aspect_dist);

    out.sentiment_dist.resize(n_s);
    for (int s = 0; s < n_s; ++s) {
        double score = 0.0;
        if (use_marginal) score += cosine(model.sentiment_topics.row(s), d);
        if (use_joint) {
            double m = 0.0;
            for (int a = 0; a < n_a; ++a) m += joint_cos[model.joint_row(s, a)];
            score += m / n_a;
        }
        out.sentiment_dist[s] = temperature * score;
    }
    softmax_inplace(out.sentiment_dist);
    return out;
}

TopicRef resolve_topic(const TopicSchema& schema, std::string_view name) {
    auto pipe = name.find('|');
    if (pipe != std::string_view::npos) {
        int s = schema.sentiment_index(name.substr(0, pipe));
        int a = schema.aspect_index(name.substr(pipe + 1));
        if (s >= 0 && a >= 0) return {TopicRef::Kind::joint, s, a};
    } else {
        if (int a = schema.aspect_index(name); a >= 0) return {TopicRef::Kind::aspect, -1, a};
        if (int s = schema.sentiment_index(name); s >= 0)
            return {TopicRef::Kind::sentiment, s, -1};
    }
    std::string valid;
    for (const auto& a : schema.aspects) valid += " " + a;
    for (const auto& s : schema.sentiments) valid += " " + s;
    for (int s = 0; s < schema.n_sentiments(); ++s)
        for (int a = 0; a < schema.n_aspects(); ++a) valid += " " + schema.joint_name(s, a);
    throw ValidationError("unknown topic \"" + std::string(name) + "\"; valid topics:" + valid);
}

std::string topic_name(const TopicSchema& schema, const TopicRef& ref) {
    switch (ref.kind) {
        case TopicRef::Kind::aspect: return schema.aspects[ref.a];
        case TopicRef::Kind::sentiment: return schema.sentiments[ref.s];
        case TopicRef::Kind::joint: return schema.joint_name(ref.s, ref.a);
    }
    return {};
}

std::span<const double> topic_vector(const EmbeddingModel& model, const TopicRef& ref) {
    switch (ref.kind) {
        case TopicRef::Kind::aspect: return model.aspect_topics.row(ref.a);
        case TopicRef::Kind::sentiment: return model.sentiment_topics.row(ref.s);
        case TopicRef::Kind::joint: return model.joint_topics.row(model.joint_row(ref.s, ref.a));
    }
    return {};
}

std::vector<ScoredTerm> top_terms(const EmbeddingModel& model, const Vocabulary& vocab,
                                  const TopicRef& ref, int n) {
    if (n < 1) throw ValidationError("top_terms: n must be >= 1");
    auto t = topic_vector(model, ref);
    std::vector<int32_t> ids(vocab.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<double> score(vocab.size());
    for (int32_t i = 0; i < vocab.size(); ++i) score[i] = cosine(model.center.row(i), t);

    const int k = std::min<int>(n, vocab.size());
    std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), [&](int32_t x, int32_t y) {
        if (score[x] != score[y]) return score[x] > score[y];
        return x < y;
    });
    std::vector<ScoredTerm> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) out.push_back({vocab.token(ids[i]), score[ids[i]]});
    return out;
}

namespace {

// Leading eigenpair of a symmetric PSD matrix by power iteration.
std::pair<double, std::vector<double>> power_iterate(const Mat& c, uint64_t seed) {
    const int n = c.rows();
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    double nv = norm2(v);
    for (double& x : v) x /= nv;

    std::vector<double> w(n);
    for (int it = 0; it < 200; ++it) {
        for (int i = 0; i < n; ++i) w[i] = dot(c.row(i), v);
        double nw = norm2(w);
        if (nw == 0.0) return {0.0, std::vector<double>(n, 0.0)};
        double delta = 0.0;
        for (int i = 0; i < n; ++i) {
            w[i] /= nw;
            delta += (w[i] - v[i]) * (w[i] - v[i]);
        }
        v = w;
        if (std::sqrt(delta) < 1e-10) break;
    }
    std::vector<double> cv(n);
    for (int i = 0; i < n; ++i) cv[i] = dot(c.row(i), v);
    return {dot(cv, v), v};
}

}  // namespace

std::vector<ProjectedPoint> project_topics_2d(const EmbeddingModel& model,
                                              std::string* warning) {
    const TopicSchema& sc = model.schema;
    const int n = sc.n_aspects() + sc.n_sentiments() + sc.n_joint();
    if (n < 2) throw ValidationError("project_topics_2d: need at least 2 topic vectors");
    const int dim = model.dim;

    Mat x(n, dim);
    int r = 0;
    std::vector<std::string> names;
    names.reserve(n);
    for (int a = 0; a < sc.n_aspects(); ++a, ++r) {
        std::ranges::copy(model.aspect_topics.row(a), x.row(r).begin());
        names.push_back(sc.aspects[a]);
    }
    for (int s = 0; s < sc.n_sentiments(); ++s, ++r) {
        std::ranges::copy(model.sentiment_topics.row(s), x.row(r).begin());
        names.push_back(sc.sentiments[s]);
    }
    for (int s = 0; s < sc.n_sentiments(); ++s)
        for (int a = 0; a < sc.n_aspects(); ++a, ++r) {
            std::ranges::copy(model.joint_topics.row(model.joint_row(s, a)), x.row(r).begin());
            names.push_back(sc.joint_name(s, a));
        }

    std::vector<double> mean(dim, 0.0);
    for (int i = 0; i < n; ++i) axpy(1.0 / n, x.row(i), mean);
    for (int i = 0; i < n; ++i) axpy(-1.0, mean, x.row(i));

    Mat cov(dim, dim);
    for (int i = 0; i < n; ++i) {
        auto xi = x.row(i);
        for (int p = 0; p < dim; ++p)
            if (xi[p] != 0.0) axpy(xi[p] / n, xi, cov.row(p));
    }

    auto [l1, v1] = power_iterate(cov, mix_seed(0x70636131, 1));
    // deflate: cov -= l1 * v1 v1^T
    for (int p = 0; p < dim; ++p) axpy(-l1 * v1[p], v1, cov.row(p));
    auto [l2, v2] = power_iterate(cov, mix_seed(0x70636132, 2));

    bool rank1 = l1 > 0.0 && l2 <= l1 * 1e-9;
    if (l1 <= 0.0) {  // zero variance: all topics identical
        std::fill(v1.begin(), v1.end(), 0.0);
        rank1 = true;
    }
    if (rank1) {
        std::fill(v2.begin(), v2.end(), 0.0);
        if (warning)
            *warning = "topic matrix is rank-deficient; second projection coordinate set to 0";
    }

    std::vector<ProjectedPoint> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.push_back({names[i], dot(x.row(i), v1), dot(x.row(i), v2)});
    return out;
}

}  // namespace jasen
