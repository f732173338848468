#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "jasen/inference.hpp"
#include "jasen/rng.hpp"

using namespace jasen;

namespace {

constexpr double kHandTol = 5e-7;

TopicSchema food_service_schema() {
    return parse_schema(
        "[aspects]\nfood: sushi\nservice: staff\n[sentiments]\ngood: great\nbad: awful\n");
}

EmbeddingModel model_with_center(const TopicSchema& schema,
                                 const std::vector<std::vector<double>>& rows, int n_docs = 1) {
    const int dim = static_cast<int>(rows[0].size());
    EmbeddingModel m =
        make_embedding_model(static_cast<int>(rows.size()), n_docs, dim, schema, 1);
    for (size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < dim; ++c) m.center.at(static_cast<int>(r), c) = rows[r][c];
    return m;
}

void set_row(Mat& m, int r, const std::vector<double>& v) {
    for (size_t c = 0; c < v.size(); ++c) m.at(r, static_cast<int>(c)) = v[c];
}

}  // namespace

TEST_CASE("document vector is the mean of the token center vectors") {
    TopicSchema schema = food_service_schema();
    EmbeddingModel m = model_with_center(schema, {{1, 2}, {3, 4}});

    std::vector<int32_t> ids = {0, 1};
    std::vector<double> d = document_vector(m, ids);
    CHECK(d == std::vector<double>{2, 3});

    std::vector<int32_t> one = {1};
    CHECK(document_vector(m, one) == std::vector<double>{3, 4});

    std::vector<int32_t> repeated = {0, 0, 1};
    std::vector<double> r = document_vector(m, repeated);
    CHECK(std::abs(r[0] - 5.0 / 3.0) < 1e-12);
    CHECK(std::abs(r[1] - 8.0 / 3.0) < 1e-12);

    CHECK_THROWS_AS(document_vector(m, {}), Error);
}

TEST_CASE("scoring variant names round-trip") {
    CHECK(parse_scoring("combined") == ScoringVariant::combined);
    CHECK(parse_scoring("joint-only") == ScoringVariant::joint_only);
    CHECK(parse_scoring("marginal-only") == ScoringVariant::marginal_only);
    CHECK_THROWS_AS(parse_scoring("bogus"), ValidationError);
    CHECK(to_string(parse_scoring("joint-only")) == "joint-only");
    CHECK(to_string(ScoringVariant::combined) == "combined");
}

TEST_CASE("argmax of a soft prediction breaks ties toward the lower index") {
    SoftPrediction p{{0.4, 0.4, 0.2}, {0.3, 0.7}};
    CHECK(p.aspect() == 0);
    CHECK(p.sentiment() == 1);
}

TEST_CASE("prediction is uniform when every topic is orthogonal to the document") {
    TopicSchema schema = food_service_schema();
    EmbeddingModel m = model_with_center(schema, {{1, 0}});  // topics stay zero
    std::vector<int32_t> ids = {0};
    SoftPrediction p = embed_predict(m, ids, 20.0);
    CHECK(std::abs(p.aspect_dist[0] - 0.5) < 1e-12);
    CHECK(std::abs(p.aspect_dist[1] - 0.5) < 1e-12);
    CHECK(std::abs(p.sentiment_dist[0] - 0.5) < 1e-12);
}

TEST_CASE("a unit cosine gap at temperature 1 gives the logistic split") {
    // one sentiment so the joint and marginal scores coincide aspect-wise
    TopicSchema schema;
    schema.aspects = {"x", "y"};
    schema.sentiments = {"only"};
    schema.aspect_keywords = {{}, {}};
    schema.sentiment_keywords = {{}};

    EmbeddingModel m = model_with_center(schema, {{1, 0}});
    set_row(m.aspect_topics, 0, {1, 0});
    set_row(m.aspect_topics, 1, {0, 1});
    set_row(m.joint_topics, 0, {1, 0});
    set_row(m.joint_topics, 1, {0, 1});

    std::vector<int32_t> ids = {0};
    SoftPrediction marg = embed_predict(m, ids, 1.0, ScoringVariant::marginal_only);
    CHECK(std::abs(marg.aspect_dist[0] - 0.731059) < kHandTol);
    CHECK(std::abs(marg.aspect_dist[1] - 0.268941) < kHandTol);
    CHECK(std::abs(marg.sentiment_dist[0] - 1.0) < 1e-12);

    SoftPrediction joint = embed_predict(m, ids, 1.0, ScoringVariant::joint_only);
    CHECK(std::abs(joint.aspect_dist[0] - 0.731059) < kHandTol);

    // combined adds both cosine channels: logits (2, 0)
    SoftPrediction comb = embed_predict(m, ids, 1.0, ScoringVariant::combined);
    CHECK(std::abs(comb.aspect_dist[0] - 0.880797) < kHandTol);
}

TEST_CASE("combined scoring matches a by-hand recomputation") {
    TopicSchema schema = food_service_schema();
    EmbeddingModel m = model_with_center(
        schema, {{0.3, -0.2, 0.9}, {-0.4, 0.8, 0.1}, {0.6, 0.5, -0.7}, {0.2, 0.2, 0.2}});
    Rng rng(99);
    for (Mat* mat : {&m.aspect_topics, &m.sentiment_topics, &m.joint_topics})
        for (int r = 0; r < mat->rows(); ++r)
            for (int c = 0; c < mat->cols(); ++c) mat->at(r, c) = rng.uniform(-1.0, 1.0);

    std::vector<int32_t> ids = {0, 2, 3};
    const double T = 20.0;
    std::vector<double> d = document_vector(m, ids);

    std::vector<double> alogit(2), slogit(2);
    for (int a = 0; a < 2; ++a) {
        double joint = 0.0;
        for (int s = 0; s < 2; ++s) joint += cosine(m.joint_topics.row(m.joint_row(s, a)), d);
        alogit[a] = T * (cosine(m.aspect_topics.row(a), d) + joint / 2.0);
    }
    for (int s = 0; s < 2; ++s) {
        double joint = 0.0;
        for (int a = 0; a < 2; ++a) joint += cosine(m.joint_topics.row(m.joint_row(s, a)), d);
        slogit[s] = T * (cosine(m.sentiment_topics.row(s), d) + joint / 2.0);
    }
    softmax_inplace(alogit);
    softmax_inplace(slogit);

    SoftPrediction p = embed_predict(m, ids, T);
    for (int a = 0; a < 2; ++a) CHECK(std::abs(p.aspect_dist[a] - alogit[a]) < 1e-9);
    for (int s = 0; s < 2; ++s) CHECK(std::abs(p.sentiment_dist[s] - slogit[s]) < 1e-9);
}

TEST_CASE("prediction is invariant to positive rescaling of vectors") {
    TopicSchema schema = food_service_schema();
    EmbeddingModel a = model_with_center(schema, {{0.4, 0.1}, {-0.3, 0.6}});
    Rng rng(5);
    for (Mat* mat : {&a.aspect_topics, &a.sentiment_topics, &a.joint_topics})
        for (int r = 0; r < mat->rows(); ++r)
            for (int c = 0; c < mat->cols(); ++c) mat->at(r, c) = rng.uniform(-1.0, 1.0);

    EmbeddingModel b = a;
    for (int r = 0; r < b.center.rows(); ++r)
        for (int c = 0; c < b.center.cols(); ++c) b.center.at(r, c) *= 5.0;
    for (Mat* mat : {&b.aspect_topics, &b.sentiment_topics, &b.joint_topics})
        for (int r = 0; r < mat->rows(); ++r)
            for (int c = 0; c < mat->cols(); ++c) mat->at(r, c) *= 3.0;

    std::vector<int32_t> ids = {0, 1};
    SoftPrediction pa = embed_predict(a, ids, 20.0);
    SoftPrediction pb = embed_predict(b, ids, 20.0);
    for (size_t i = 0; i < pa.aspect_dist.size(); ++i)
        CHECK(std::abs(pa.aspect_dist[i] - pb.aspect_dist[i]) < 1e-12);
    for (size_t i = 0; i < pa.sentiment_dist.size(); ++i)
        CHECK(std::abs(pa.sentiment_dist[i] - pb.sentiment_dist[i]) < 1e-12);
}

TEST_CASE("higher temperature sharpens the prediction") {
    TopicSchema schema = food_service_schema();
    EmbeddingModel m = model_with_center(schema, {{1, 0}});
    set_row(m.aspect_topics, 0, {1, 0});
    set_row(m.aspect_topics, 1, {0, 1});
    std::vector<int32_t> ids = {0};
    SoftPrediction cool = embed_predict(m, ids, 1.0, ScoringVariant::marginal_only);
    SoftPrediction hot = embed_predict(m, ids, 8.0, ScoringVariant::marginal_only);
    CHECK(hot.aspect_dist[0] > cool.aspect_dist[0]);
}

TEST_CASE("prediction rejects bad temperature and degenerate documents") {
    TopicSchema schema = food_service_schema();
    EmbeddingModel m = model_with_center(schema, {{1, 0}, {0, 0}});
    std::vector<int32_t> ids = {0};
    CHECK_THROWS_AS(embed_predict(m, ids, 0.0), ValidationError);
    CHECK_THROWS_AS(embed_predict(m, ids, -3.0), ValidationError);
    CHECK_THROWS_AS(embed_predict(m, {}, 20.0), Error);
    std::vector<int32_t> zero = {1};  // all-zero center row
    CHECK_THROWS_AS(embed_predict(m, zero, 20.0), Error);
}

TEST_CASE("topic names resolve across both dimensions and joints") {
    TopicSchema schema = food_service_schema();

    TopicRef r = resolve_topic(schema, "food");
    CHECK(r.kind == TopicRef::Kind::aspect);
    CHECK(r.a == 0);

    r = resolve_topic(schema, "bad");
    CHECK(r.kind == TopicRef::Kind::sentiment);
    CHECK(r.s == 1);

    r = resolve_topic(schema, "good|service");
    CHECK(r.kind == TopicRef::Kind::joint);
    CHECK(r.s == 0);
    CHECK(r.a == 1);

    CHECK(topic_name(schema, resolve_topic(schema, "good|service")) == "good|service");
    CHECK(topic_name(schema, resolve_topic(schema, "food")) == "food");

    CHECK_THROWS_AS(resolve_topic(schema, "nope"), ValidationError);
    CHECK_THROWS_AS(resolve_topic(schema, "bad|nope"), ValidationError);
    CHECK_THROWS_AS(resolve_topic(schema, "food|good"), ValidationError);  // wrong order
    try {
        resolve_topic(schema, "zzz");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("food") != std::string::npos);
        CHECK(msg.find("good|food") != std::string::npos);
    }
}

TEST_CASE("a label used in both dimensions resolves as an aspect") {
    TopicSchema schema = parse_schema(
        "[aspects]\nfresh: a\nother: b\n[sentiments]\nfresh: c\nstale: d\n");
    TopicRef r = resolve_topic(schema, "fresh");
    CHECK(r.kind == TopicRef::Kind::aspect);
    CHECK(r.a == 0);
    // the sentiment remains reachable through joint names
    r = resolve_topic(schema, "fresh|other");
    CHECK(r.kind == TopicRef::Kind::joint);
    CHECK(r.s == 0);
    CHECK(r.a == 1);
}

TEST_CASE("topic vectors point at the right matrix rows") {
    TopicSchema schema = food_service_schema();
    EmbeddingModel m = model_with_center(schema, {{1, 0}});
    set_row(m.aspect_topics, 1, {7, 8});
    set_row(m.sentiment_topics, 0, {5, 6});
    set_row(m.joint_topics, m.joint_row(1, 0), {2, 9});

    CHECK(topic_vector(m, resolve_topic(schema, "service"))[0] == 7.0);
    CHECK(topic_vector(m, resolve_topic(schema, "good"))[1] == 6.0);
    CHECK(topic_vector(m, resolve_topic(schema, "bad|food"))[1] == 9.0);
}

TEST_CASE("top terms rank by cosine with id tie-breaks") {
    TopicSchema schema = parse_schema(
        "[aspects]\nfood: sushi\nservice: staff\n[sentiments]\ngood: great\nbad: awful\n");
    // vocab ids: 0 sushi, 1 staff, 2 great, 3 awful, 4 extra
    Vocabulary vocab = Vocabulary::from_tokens({"sushi", "staff", "great", "awful", "extra"});
    EmbeddingModel m = model_with_center(
        schema, {{1, 0}, {2, 0}, {1, 1}, {0, 1}, {-1, 0}});
    set_row(m.aspect_topics, 0, {1, 0});

    TopicRef food = resolve_topic(schema, "food");
    std::vector<ScoredTerm> top = top_terms(m, vocab, food, 3);
    REQUIRE(top.size() == 3);
    // sushi and staff tie at cosine 1; the lower id wins
    CHECK(top[0].token == "sushi");
    CHECK(top[1].token == "staff");
    CHECK(top[2].token == "great");
    CHECK(std::abs(top[0].score - 1.0) < 1e-12);
    CHECK(std::abs(top[1].score - 1.0) < 1e-12);
    CHECK(std::abs(top[2].score - std::sqrt(0.5)) < 1e-12);

    // n larger than the vocabulary: clipped, ordered, keywords included
    std::vector<ScoredTerm> all = top_terms(m, vocab, food, 50);
    CHECK(all.size() == 5);
    CHECK(all.back().token == "extra");  // cosine -1 ranks last

    CHECK_THROWS_AS(top_terms(m, vocab, food, 0), ValidationError);
}

TEST_CASE("seed keywords keep their own topic's top slot after initialization") {
    TopicSchema schema = parse_schema(
        "[aspects]\nfood: sushi\nservice: staff\n[sentiments]\ngood: great\nbad: awful\n");
    Vocabulary vocab = Vocabulary::from_tokens({"sushi", "staff", "great", "awful"});
    EmbeddingModel m = model_with_center(
        schema, {{0.9, 0.1}, {-0.2, 0.8}, {0.5, -0.5}, {-0.6, -0.6}});
    KeywordIds kw = resolve_keywords(schema, vocab, nullptr);
    init_topics(m, kw);

    CHECK(top_terms(m, vocab, resolve_topic(schema, "food"), 1)[0].token == "sushi");
    CHECK(top_terms(m, vocab, resolve_topic(schema, "service"), 1)[0].token == "staff");
    CHECK(top_terms(m, vocab, resolve_topic(schema, "bad"), 1)[0].token == "awful");
}

TEST_CASE("2-d projection preserves geometry of planar topic layouts") {
    TopicSchema schema = food_service_schema();
    EmbeddingModel m = model_with_center(schema, {{1, 0, 0, 0}});

    // two orthonormal directions in R^4
    const std::vector<double> c1 = {0.5, 0.5, 0.5, 0.5};
    const std::vector<double> c2 = {0.5, -0.5, 0.5, -0.5};
    // 8 planar points: aspects, sentiments, joints in model order
    const double pts[8][2] = {{0, 0},  {4, 1},  {1, 3},  {-2, 2},
                              {3, -2}, {-1, -1}, {2, 4},  {-3, 1}};
    Mat* mats[3] = {&m.aspect_topics, &m.sentiment_topics, &m.joint_topics};
    int idx = 0;
    for (Mat* mat : mats)
        for (int r = 0; r < mat->rows(); ++r, ++idx)
            for (int c = 0; c < 4; ++c)
                mat->at(r, c) = pts[idx][0] * c1[c] + pts[idx][1] * c2[c];

    std::string warning;
    std::vector<ProjectedPoint> proj = project_topics_2d(m, &warning);
    REQUIRE(proj.size() == 8);
    CHECK(warning.empty());
    CHECK(proj[0].name == "food");
    CHECK(proj[2].name == "good");
    CHECK(proj[4].name == "good|food");
    CHECK(proj[7].name == "bad|service");

    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j) {
            const double orig = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
            const double got =
                std::hypot(proj[i].x - proj[j].x, proj[i].y - proj[j].y);
            CHECK(std::abs(orig - got) < 1e-6);
        }
}

TEST_CASE("degenerate topic layouts project with a warning") {
    TopicSchema schema = food_service_schema();

    // identical topics: every centered row is zero
    EmbeddingModel same = model_with_center(schema, {{1, 0}});
    for (Mat* mat : {&same.aspect_topics, &same.sentiment_topics, &same.joint_topics})
        for (int r = 0; r < mat->rows(); ++r) set_row(*mat, r, {2, 3});
    std::string warning;
    std::vector<ProjectedPoint> proj = project_topics_2d(same, &warning);
    CHECK(!warning.empty());
    for (const auto& p : proj) {
        CHECK(std::abs(p.x) < 1e-9);
        CHECK(std::abs(p.y) < 1e-9);
    }

    // collinear topics: rank 1, second coordinate collapses
    EmbeddingModel line = model_with_center(schema, {{1, 0}});
    double t = 0.0;
    for (Mat* mat : {&line.aspect_topics, &line.sentiment_topics, &line.joint_topics})
        for (int r = 0; r < mat->rows(); ++r) {
            set_row(*mat, r, {t, 2.0 * t});
            t += 1.0;
        }
    warning.clear();
    proj = project_topics_2d(line, &warning);
    CHECK(!warning.empty());
    for (const auto& p : proj) CHECK(p.y == 0.0);
    // x spacing still reflects the 1-d spread
    CHECK(std::abs(proj[1].x - proj[0].x) > 0.1);
}
