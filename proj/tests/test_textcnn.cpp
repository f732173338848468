#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "jasen/rng.hpp"
#include "jasen/textcnn.hpp"

using namespace jasen;
using jasen::testing::central_diff;
using jasen::testing::rel_err;

namespace {

constexpr double kHandTol = 5e-7;

Mat small_embeddings(int vocab, int dim, uint64_t seed) {
    Mat emb(vocab, dim);
    Rng rng(seed);
    for (int r = 0; r < vocab; ++r)
        for (int c = 0; c < dim; ++c) emb.at(r, c) = rng.uniform(-0.9, 0.9);
    return emb;
}

void zero_parameters(CnnModel& m) {
    for (Mat& f : m.filters) f.fill(0.0);
    for (auto& b : m.filter_bias) std::fill(b.begin(), b.end(), 0.0);
    m.output_weights.fill(0.0);
    std::fill(m.output_bias.begin(), m.output_bias.end(), 0.0);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("construction validates and is seed-deterministic") {
    Mat emb = small_embeddings(5, 4, 1);
    CHECK_THROWS_AS(make_cnn(emb, 1, 3), ValidationError);

    CnnModel a = make_cnn(emb, 3, 3);
    CnnModel b = make_cnn(emb, 3, 3);
    CHECK(a.filters[0] == b.filters[0]);
    CHECK(a.filters[2] == b.filters[2]);
    CHECK(a.output_weights == b.output_weights);

    CnnModel c = make_cnn(emb, 3, 4);
    CHECK(!(a.filters[0] == c.filters[0]));

    // biases start at zero; weights stay inside +-sqrt(1/fan_in)
    for (double v : a.output_bias) CHECK(v == 0.0);
    for (int w = 0; w < 3; ++w) {
        const double bound = std::sqrt(1.0 / a.filters[w].cols());
        for (int r = 0; r < a.filters[w].rows(); ++r)
            for (int col = 0; col < a.filters[w].cols(); ++col)
                CHECK(std::abs(a.filters[w].at(r, col)) <= bound);
        for (double v : a.filter_bias[w]) CHECK(v == 0.0);
    }
    CHECK(a.all_finite());
}

TEST_CASE("forward pass is a distribution; zero parameters give uniform") {
    Mat emb = small_embeddings(6, 4, 2);
    CnnModel m = make_cnn(emb, 3, 7);

    std::vector<int32_t> ids = {0, 1, 2, 3, 4};
    std::vector<double> q = cnn_forward(m, ids);
    REQUIRE(q.size() == 3);
    double sum = 0.0;
    for (double v : q) {
        CHECK(v > 0.0);
        sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);

    zero_parameters(m);
    for (const auto& doc : std::vector<std::vector<int32_t>>{{0, 1, 2, 3, 4}, {5}, {}}) {
        std::vector<double> u = cnn_forward(m, doc);
        for (double v : u) CHECK(std::abs(v - 1.0 / 3.0) < 1e-12);
    }
}

TEST_CASE("short documents are padded with zero rows") {
    Mat emb = small_embeddings(6, 4, 3);
    for (int c = 0; c < 4; ++c) emb.at(5, c) = 0.0;  // token 5 embeds to zero
    CnnModel m = make_cnn(emb, 2, 11);

    std::vector<int32_t> zeros = {5, 5, 5, 5};
    CHECK(cnn_forward(m, zeros) == cnn_forward(m, {}));
    std::vector<int32_t> one = {5};
    CHECK(cnn_forward(m, one) == cnn_forward(m, {}));
}

TEST_CASE("a large output bias saturates the softmax") {
    Mat emb = small_embeddings(4, 3, 4);
    CnnModel m = make_cnn(emb, 2, 5);
    zero_parameters(m);
    m.output_bias[1] = 50.0;
    std::vector<int32_t> ids = {0, 1};
    std::vector<double> q = cnn_forward(m, ids);
    CHECK(q[1] > 1.0 - 1e-12);
}

TEST_CASE("distillation loss at zero parameters is ln 2 for two classes") {
    Mat emb = small_embeddings(4, 3, 5);
    CnnModel m = make_cnn(emb, 2, 6);
    zero_parameters(m);
    std::vector<int32_t> ids = {0, 1, 2};
    std::vector<double> onehot = {1.0, 0.0};
    CHECK(std::abs(distill_loss_grad(m, ids, onehot) - 0.693147) < kHandTol);
    std::vector<double> uniform = {0.5, 0.5};
    CHECK(std::abs(distill_loss_grad(m, ids, uniform) - 0.693147) < kHandTol);
}

TEST_CASE("distillation loss approaches zero on a confident correct model") {
    Mat emb = small_embeddings(4, 3, 6);
    CnnModel m = make_cnn(emb, 2, 7);
    zero_parameters(m);
    m.output_bias[0] = 60.0;
    std::vector<int32_t> ids = {0, 1};
    std::vector<double> target = {1.0, 0.0};
    CHECK(distill_loss_grad(m, ids, target) < 1e-10);
}

TEST_CASE("distillation loss is bounded below by the target entropy") {
    Mat emb = small_embeddings(8, 5, 7);
    CnnModel m = make_cnn(emb, 4, 8);
    std::vector<int32_t> ids = {0, 3, 5, 6, 2};
    std::vector<double> target = {0.1, 0.4, 0.2, 0.3};
    double entropy = 0.0;
    for (double t : target) entropy -= t * std::log(t);
    CHECK(distill_loss_grad(m, ids, target) >= entropy - 1e-12);
}

TEST_CASE("distillation gradients match finite differences everywhere") {
    Mat emb = small_embeddings(6, 4, 8);
    CnnModel m = make_cnn(emb, 2, 12345);
    std::vector<int32_t> ids = {0, 2, 4, 1, 3};
    std::vector<double> target = {0.7, 0.3};

    CnnGrad g(m);
    distill_loss_grad(m, ids, target, &g);
    auto loss = [&] { return distill_loss_grad(m, ids, target); };

    double worst = 0.0;
    for (int w = 0; w < 3; ++w) {
        for (int r = 0; r < m.filters[w].rows(); ++r)
            for (int c = 0; c < m.filters[w].cols(); ++c)
                worst = std::max(worst, rel_err(g.filters[w].at(r, c),
                                                central_diff(m.filters[w].at(r, c), loss)));
        for (size_t i = 0; i < m.filter_bias[w].size(); ++i)
            worst = std::max(worst, rel_err(g.filter_bias[w][i],
                                            central_diff(m.filter_bias[w][i], loss)));
    }
    for (int r = 0; r < m.output_weights.rows(); ++r)
        for (int c = 0; c < m.output_weights.cols(); ++c)
            worst = std::max(worst, rel_err(g.output_weights.at(r, c),
                                            central_diff(m.output_weights.at(r, c), loss)));
    for (size_t i = 0; i < m.output_bias.size(); ++i)
        worst = std::max(worst,
                         rel_err(g.output_bias[i], central_diff(m.output_bias[i], loss)));
    CHECK(worst < 1e-3);
}

TEST_CASE("a batch step takes the mean gradient") {
    Mat emb = small_embeddings(6, 4, 9);
    CnnModel m = make_cnn(emb, 2, 13);
    std::vector<int32_t> d1 = {0, 1, 2, 3};
    std::vector<int32_t> d2 = {4, 5, 1};
    std::vector<double> t1 = {1.0, 0.0};
    std::vector<double> t2 = {0.2, 0.8};
    std::vector<DistillExample> batch = {{d1, t1}, {d2, t2}};

    CnnGrad g(m);
    const double l1 = distill_loss_grad(m, d1, t1, &g);
    const double l2 = distill_loss_grad(m, d2, t2, &g);
    const double before = m.filters[1].at(3, 2);
    const double gsum = g.filters[1].at(3, 2);

    CnnModel stepped = m;
    const double lr = 0.05;
    const double mean_loss = distill_step(stepped, batch, lr);
    CHECK(std::abs(mean_loss - (l1 + l2) / 2.0) < 1e-12);
    CHECK(std::abs(stepped.filters[1].at(3, 2) - (before - lr * gsum / 2.0)) < 1e-12);

    CHECK_THROWS_AS(distill_step(m, {}, lr), ValidationError);
}

TEST_CASE("repeated steps on one example drive its loss down") {
    Mat emb = small_embeddings(6, 4, 10);
    CnnModel m = make_cnn(emb, 3, 14);
    std::vector<int32_t> ids = {0, 2, 4, 5};
    std::vector<double> target = {0.0, 1.0, 0.0};
    std::vector<DistillExample> batch = {{ids, target}};

    const double first = distill_loss_grad(m, ids, target);
    double last = first;
    for (int i = 0; i < 60; ++i) last = distill_step(m, batch, 0.1);
    CHECK(last < first * 0.5);
    CHECK(m.all_finite());
}

TEST_CASE("batch prediction matches the single forward pass") {
    Mat emb = small_embeddings(7, 4, 11);
    CnnModel m = make_cnn(emb, 3, 15);
    std::vector<std::vector<int32_t>> docs = {{0, 1, 2}, {}, {6, 5, 4, 3, 2, 1}};
    std::vector<std::vector<double>> out = predict_batch(m, docs);
    REQUIRE(out.size() == 3);
    for (size_t i = 0; i < docs.size(); ++i) CHECK(out[i] == cnn_forward(m, docs[i]));
}

TEST_CASE("binary model files round-trip exactly") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "jasen_cnn_io";
    fs::create_directories(dir);
    const std::string p1 = (dir / "m.jcnn").string();
    const std::string p2 = (dir / "m2.jcnn").string();

    Mat emb = small_embeddings(6, 4, 12);
    CnnModel m = make_cnn(emb, 3, 16);
    save_cnn(m, p1);
    CnnModel back = load_cnn(p1);

    CHECK(back.dim == m.dim);
    CHECK(back.n_classes == m.n_classes);
    CHECK(back.input_embeddings.rows() == 6);
    // parameters survive the float32 narrowing within single precision
    for (int w = 0; w < 3; ++w)
        for (int r = 0; r < m.filters[w].rows(); ++r)
            for (int c = 0; c < m.filters[w].cols(); ++c)
                CHECK(std::abs(back.filters[w].at(r, c) - m.filters[w].at(r, c)) <
                      1e-6 * std::max(1.0, std::abs(m.filters[w].at(r, c))));

    // a fresh save of the loaded model is byte-identical
    save_cnn(back, p2);
    CHECK(slurp(p1) == slurp(p2));

    // the loaded model predicts like the float32-rounded original
    std::vector<int32_t> ids = {0, 3, 5, 1};
    std::vector<double> qa = cnn_forward(back, ids);
    std::vector<double> qb = cnn_forward(load_cnn(p2), ids);
    CHECK(qa == qb);
}

TEST_CASE("corrupt binary model files are rejected") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "jasen_cnn_bad";
    fs::create_directories(dir);
    const std::string good = (dir / "good.jcnn").string();

    Mat emb = small_embeddings(5, 3, 13);
    CnnModel m = make_cnn(emb, 2, 17);
    save_cnn(m, good);
    const std::string bytes = slurp(good);

    auto write_bytes = [&](const std::string& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << content;
    };

    CHECK_THROWS_AS(load_cnn((dir / "missing.jcnn").string()), ModelIoError);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    write_bytes((dir / "magic.jcnn").string(), bad_magic);
    CHECK_THROWS_AS(load_cnn((dir / "magic.jcnn").string()), ModelIoError);

    write_bytes((dir / "trunc.jcnn").string(), bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_cnn((dir / "trunc.jcnn").string()), ModelIoError);

    write_bytes((dir / "trail.jcnn").string(), bytes + "zz");
    CHECK_THROWS_AS(load_cnn((dir / "trail.jcnn").string()), ModelIoError);

    // non-finite parameter: overwrite the first float payload with a NaN
    std::string nan_bytes = bytes;
    const size_t header = 4 + 1 + 3 * 4;
    nan_bytes[header + 0] = '\x00';
    nan_bytes[header + 1] = '\x00';
    nan_bytes[header + 2] = '\xc0';
    nan_bytes[header + 3] = '\x7f';
    write_bytes((dir / "nan.jcnn").string(), nan_bytes);
    CHECK_THROWS_AS(load_cnn((dir / "nan.jcnn").string()), ModelIoError);
}
