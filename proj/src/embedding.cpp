#include "jasen/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "jasen/rng.hpp"

namespace jasen {

EmbeddingModel make_embedding_model(int vocab_size, int n_docs, int dim,
                                    const TopicSchema& schema, uint64_t seed) {
    if (dim < 1) throw ValidationError("embedding dim must be >= 1");
    EmbeddingModel m;
    m.dim = dim;
    m.schema = schema;
    m.center = Mat(vocab_size, dim);
    m.context = Mat(vocab_size, dim);
    m.doc_vectors = Mat(n_docs, dim);
    m.aspect_topics = Mat(schema.n_aspects(), dim);
    m.sentiment_topics = Mat(schema.n_sentiments(), dim);
    m.joint_topics = Mat(schema.n_joint(), dim);

    Rng rng(mix_seed(seed, 1));
    const double r = 0.5 / dim;
    for (int i = 0; i < vocab_size; ++i)
        for (double& x : m.center.row(i)) x = rng.uniform(-r, r);
    return m;
}

namespace {

// Negative-sampling pair against an arbitrary context matrix (word contexts or
// document vectors). Gradients are evaluated at the pre-update point: the
// center gradient is buffered before any row is touched.
double ns_pair_loss_grad(EmbeddingModel& model, Mat& ctx_mat, int32_t center_id,
                         int32_t positive, std::span<const int32_t> negatives,
                         GradSink* sink) {
    auto u = model.center.row(center_id);
    auto vp = ctx_mat.row(positive);

    const double s_pos = dot(vp, u);
    double loss = log1p_exp_neg(s_pos);
    const double g_pos = sigmoid(s_pos) - 1.0;

    std::vector<double> g_neg(negatives.size());
    for (size_t n = 0; n < negatives.size(); ++n) {
        const double s = dot(ctx_mat.row(negatives[n]), u);
        loss += log1p_exp_neg(-s);
        g_neg[n] = sigmoid(s);
    }

    if (sink) {
        std::vector<double> du(model.dim, 0.0);
        axpy(g_pos, vp, du);
        for (size_t n = 0; n < negatives.size(); ++n)
            axpy(g_neg[n], ctx_mat.row(negatives[n]), du);

        std::vector<double> g(model.dim);
        auto emit_ctx = [&](int32_t row, double scale) {
            auto uu = model.center.row(center_id);
            for (int k = 0; k < model.dim; ++k) g[k] = scale * uu[k];
            sink->add(ctx_mat, row, g);
        };
        emit_ctx(positive, g_pos);
        for (size_t n = 0; n < negatives.size(); ++n) emit_ctx(negatives[n], g_neg[n]);
        sink->add(model.center, center_id, du);
    }
    return loss;
}

// Full-softmax oracle over every row of the context matrix.
double exact_pair_loss_grad(EmbeddingModel& model, Mat& ctx_mat, int32_t center_id,
                            int32_t gold, GradSink* sink) {
    auto u = model.center.row(center_id);
    const int n = ctx_mat.rows();
    std::vector<double> p(n);
    for (int r = 0; r < n; ++r) p[r] = dot(ctx_mat.row(r), u);

    double mx = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double v : p) z += std::exp(v - mx);
    const double loss = std::log(z) + mx - dot(ctx_mat.row(gold), u);

    if (sink) {
        for (double& v : p) v = std::exp(v - mx) / z;
        std::vector<double> du(model.dim, 0.0);
        for (int r = 0; r < n; ++r) {
            const double dz = p[r] - (r == gold ? 1.0 : 0.0);
            axpy(dz, ctx_mat.row(r), du);
        }
        std::vector<double> g(model.dim);
        for (int r = 0; r < n; ++r) {
            const double dz = p[r] - (r == gold ? 1.0 : 0.0);
            for (int k = 0; k < model.dim; ++k) g[k] = dz * u[k];
            sink->add(ctx_mat, r, g);
        }
        sink->add(model.center, center_id, du);
    }
    return loss;
}

// Softmax gradient shared by the topic regularizers: dz is d(loss)/d(logit).
void emit_topic_grads(EmbeddingModel& model, Mat& topics, int32_t word,
                      std::span<const double> dz, GradSink* sink) {
    auto u = model.center.row(word);
    std::vector<double> du(model.dim, 0.0);
    for (int r = 0; r < topics.rows(); ++r) axpy(dz[r], topics.row(r), du);

    std::vector<double> g(model.dim);
    for (int r = 0; r < topics.rows(); ++r) {
        for (int k = 0; k < model.dim; ++k) g[k] = dz[r] * u[k];
        sink->add(topics, r, g);
    }
    sink->add(model.center, word, du);
}

std::vector<double> topic_logits(const EmbeddingModel& model, int32_t word,
                                 const Mat& topics) {
    auto u = model.center.row(word);
    std::vector<double> z(topics.rows());
    for (int r = 0; r < topics.rows(); ++r) z[r] = dot(topics.row(r), u);
    return z;
}

double log_sum_exp(std::span<const double> z) {
    double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    return mx + std::log(s);
}

}  // namespace

double local_loss_grad(EmbeddingModel& model, int32_t center_word, int32_t context_word,
                       std::span<const int32_t> negatives, GradSink* sink) {
    return ns_pair_loss_grad(model, model.context, center_word, context_word, negatives,
                             sink);
}

double local_loss_exact(EmbeddingModel& model, int32_t center_word, int32_t context_word,
                        GradSink* sink) {
    return exact_pair_loss_grad(model, model.context, center_word, context_word, sink);
}

double global_loss_grad(EmbeddingModel& model, int32_t word, int32_t doc,
                        std::span<const int32_t> negative_docs, GradSink* sink) {
    return ns_pair_loss_grad(model, model.doc_vectors, word, doc, negative_docs, sink);
}

double global_loss_exact(EmbeddingModel& model, int32_t word, int32_t doc,
                         GradSink* sink) {
    return exact_pair_loss_grad(model, model.doc_vectors, word, doc, sink);
}

std::vector<double> topic_posterior(const EmbeddingModel& model, int32_t word,
                                    const Mat& topics) {
    std::vector<double> z = topic_logits(model, word, topics);
    softmax_inplace(z);
    return z;
}

double pure_reg_loss_grad(EmbeddingModel& model, int32_t keyword, int owning_topic,
                          Mat& topics, GradSink* sink) {
    std::vector<double> z = topic_logits(model, keyword, topics);
    const double loss = log_sum_exp(z) - z[owning_topic];
    if (sink) {
        softmax_inplace(z);
        z[owning_topic] -= 1.0;
        emit_topic_grads(model, topics, keyword, z, sink);
    }
    return loss;
}

double joint_reg_loss_grad(EmbeddingModel& model, int32_t keyword, int owning_label,
                           TopicDim dim, GradSink* sink) {
    const int n_a = model.schema.n_aspects();
    const int n_s = model.schema.n_sentiments();
    std::vector<double> z = topic_logits(model, keyword, model.joint_topics);

    auto in_group = [&](int row) {
        return dim == TopicDim::aspect ? (row % n_a == owning_label)
                                       : (row / n_a == owning_label);
    };
    std::vector<double> zg;
    zg.reserve(dim == TopicDim::aspect ? n_s : n_a);
    for (int r = 0; r < static_cast<int>(z.size()); ++r)
        if (in_group(r)) zg.push_back(z[r]);

    // -log(marginal mass) = lse(all) - lse(group)
    const double loss = log_sum_exp(z) - log_sum_exp(zg);

    if (sink) {
        std::vector<double> p = z;
        softmax_inplace(p);
        double m = 0.0;
        for (int r = 0; r < static_cast<int>(p.size()); ++r)
            if (in_group(r)) m += p[r];
        std::vector<double> dz(p.size());
        for (int r = 0; r < static_cast<int>(p.size()); ++r)
            dz[r] = p[r] * (1.0 - (in_group(r) ? 1.0 / m : 0.0));
        emit_topic_grads(model, model.joint_topics, keyword, dz, sink);
    }
    return loss;
}

double cross_reg_loss_grad(EmbeddingModel& model, int32_t keyword, TopicDim other_dim,
                           GradSink* sink) {
    Mat& topics =
        other_dim == TopicDim::aspect ? model.aspect_topics : model.sentiment_topics;
    const int n = topics.rows();
    std::vector<double> z = topic_logits(model, keyword, topics);

    // KL(U || P) = sum_i (1/n) (log(1/n) - log p_i)
    const double lse = log_sum_exp(z);
    double loss = -std::log(static_cast<double>(n));
    for (double v : z) loss -= (v - lse) / n;

    if (sink) {
        std::vector<double> dz = z;
        softmax_inplace(dz);
        for (double& v : dz) v -= 1.0 / n;
        emit_topic_grads(model, topics, keyword, dz, sink);
    }
    return loss;
}

void init_topics(EmbeddingModel& model, const KeywordIds& keywords) {
    auto mean_into = [&](std::span<double> out, const std::vector<int32_t>& ids) {
        std::fill(out.begin(), out.end(), 0.0);
        for (int32_t id : ids) axpy(1.0 / ids.size(), model.center.row(id), out);
    };
    for (int a = 0; a < model.schema.n_aspects(); ++a)
        mean_into(model.aspect_topics.row(a), keywords.aspect[a]);
    for (int s = 0; s < model.schema.n_sentiments(); ++s)
        mean_into(model.sentiment_topics.row(s), keywords.sentiment[s]);
    for (int s = 0; s < model.schema.n_sentiments(); ++s)
        for (int a = 0; a < model.schema.n_aspects(); ++a) {
            auto out = model.joint_topics.row(model.joint_row(s, a));
            auto ts = model.sentiment_topics.row(s);
            auto ta = model.aspect_topics.row(a);
            for (int k = 0; k < model.dim; ++k) out[k] = 0.5 * (ts[k] + ta[k]);
        }
}

namespace {

struct SgdSink final : GradSink {
    explicit SgdSink(double step) : step(step) {}
    double step;
    void add(Mat& m, int row, std::span<const double> g) override {
        axpy(-step, g, m.row(row));
    }
};

// unigram^0.75 noise distribution, sampled by binary search on the cdf
class NoiseSampler {
public:
    explicit NoiseSampler(const Vocabulary& vocab) : cdf_(vocab.size()) {
        double acc = 0.0;
        for (int32_t i = 0; i < vocab.size(); ++i) {
            acc += std::pow(static_cast<double>(std::max<int64_t>(vocab.count(i), 1)), 0.75);
            cdf_[i] = acc;
        }
    }
    int32_t sample(Rng& rng) const {
        double x = rng.uniform() * cdf_.back();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
        if (it == cdf_.end()) --it;
        return static_cast<int32_t>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

struct KwMembership {
    TopicDim dim;
    int label;
};

struct TrainContext {
    const std::vector<Document>& docs;
    const Vocabulary& vocab;
    const EmbedHyperparams& hp;
    const EmbedTrainOptions& opts;
    EmbeddingModel& model;
    const NoiseSampler& noise;
    const std::vector<std::vector<KwMembership>>& members;
    int64_t planned_tokens;
    std::atomic<int64_t>& processed;
};

void train_docs(TrainContext& tc, std::span<const int32_t> order, bool full, Rng rng,
                EmbedEpochStats& st) {
    const auto& hp = tc.hp;
    const int n_docs = static_cast<int>(tc.docs.size());
    std::vector<int32_t> seq;
    std::vector<int32_t> negs;
    negs.reserve(hp.negatives);

    for (int32_t d : order) {
        const auto& ids = tc.docs[d].token_ids;
        seq.clear();
        if (hp.subsample > 0.0) {
            const double total = static_cast<double>(tc.vocab.total_count());
            for (int32_t w : ids) {
                const double f = static_cast<double>(tc.vocab.count(w)) / total;
                const double keep =
                    f > 0.0 ? (std::sqrt(f / hp.subsample) + 1.0) * hp.subsample / f : 1.0;
                if (keep >= 1.0 || rng.uniform() < keep) seq.push_back(w);
            }
        } else {
            seq.assign(ids.begin(), ids.end());
        }
        const int len = static_cast<int>(seq.size());

        for (int pos = 0; pos < len; ++pos) {
            const int64_t done = tc.processed.fetch_add(1, std::memory_order_relaxed);
            double frac = static_cast<double>(done) / tc.planned_tokens;
            if (frac > 1.0) frac = 1.0;
            const double lr = hp.lr_start + (hp.lr_end - hp.lr_start) * frac;
            const int32_t w = seq[pos];
            ++st.tokens;

            if (len >= 2) {
                const int lo = std::max(0, pos - hp.window);
                const int hi = std::min(len - 1, pos + hp.window);
                for (int j = lo; j <= hi; ++j) {
                    if (j == pos) continue;
                    negs.clear();
                    for (int n = 0; n < hp.negatives; ++n) {
                        int32_t cand = tc.noise.sample(rng);
                        for (int tries = 0; cand == seq[j] && tries < 100; ++tries)
                            cand = tc.noise.sample(rng);
                        if (cand != seq[j]) negs.push_back(cand);
                    }
                    SgdSink sink(lr);
                    st.local += local_loss_grad(tc.model, w, seq[j], negs, &sink);
                }
            }

            negs.clear();
            if (n_docs >= 2) {
                for (int n = 0; n < hp.negatives; ++n) {
                    int32_t cand = rng.index(n_docs);
                    for (int tries = 0; cand == d && tries < 100; ++tries)
                        cand = rng.index(n_docs);
                    if (cand != d) negs.push_back(cand);
                }
            }
            {
                SgdSink sink(lr * hp.lambda_g);
                st.global += global_loss_grad(tc.model, w, d, negs, &sink);
            }

            if (full) {
                for (const KwMembership& m : tc.members[w]) {
                    SgdSink sink(lr * hp.lambda_r);
                    Mat& pure = m.dim == TopicDim::aspect ? tc.model.aspect_topics
                                                          : tc.model.sentiment_topics;
                    st.reg += pure_reg_loss_grad(tc.model, w, m.label, pure, &sink);
                    if (!tc.opts.no_joint) {
                        st.joint += joint_reg_loss_grad(tc.model, w, m.label, m.dim, &sink);
                        const TopicDim other = m.dim == TopicDim::aspect
                                                   ? TopicDim::sentiment
                                                   : TopicDim::aspect;
                        st.cross += cross_reg_loss_grad(tc.model, w, other, &sink);
                    }
                }
            }
        }
    }
}

std::string format_epoch_line(const EmbedEpochStats& st, const EmbedHyperparams& hp) {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "stage=embedding epoch=%d warmup=%d loss_local=%.6g loss_global=%.6g "
                  "loss_reg=%.6g loss_joint=%.6g loss_cross=%.6g loss_total=%.6g tokens=%lld",
                  st.epoch, st.warmup ? 1 : 0, st.local, st.global, st.reg, st.joint,
                  st.cross, st.total(hp), static_cast<long long>(st.tokens));
    return buf;
}

}  // namespace

EmbeddingModel train_embeddings(const std::vector<Document>& docs, const Vocabulary& vocab,
                                const TopicSchema& schema, const EmbedHyperparams& hp,
                                const EmbedTrainOptions& opts, const LogFn& log,
                                std::vector<EmbedEpochStats>* stats) {
    if (hp.dim < 1 || hp.window < 1 || hp.negatives < 1 || hp.epochs < 1)
        throw ValidationError("embedding hyperparameters out of range");
    if (hp.lambda_g < 0.0 || hp.lambda_r < 0.0)
        throw ValidationError("lambda_g and lambda_r must be >= 0");

    std::vector<int32_t> nonempty;
    int64_t tokens_per_epoch = 0;
    for (size_t i = 0; i < docs.size(); ++i) {
        if (!docs[i].empty()) {
            nonempty.push_back(static_cast<int32_t>(i));
            tokens_per_epoch += static_cast<int64_t>(docs[i].token_ids.size());
        }
    }
    if (nonempty.empty()) throw Error("train_embeddings: corpus has no non-empty document");

    std::vector<std::string> warnings;
    KeywordIds kw = resolve_keywords(schema, vocab, &warnings);
    if (log)
        for (const auto& w : warnings) log("stage=embedding warn=\"" + w + "\"");

    EmbeddingModel model = make_embedding_model(vocab.size(), static_cast<int>(docs.size()),
                                                hp.dim, schema, hp.seed);

    std::vector<std::vector<KwMembership>> members(vocab.size());
    for (int a = 0; a < schema.n_aspects(); ++a)
        for (int32_t id : kw.aspect[a]) members[id].push_back({TopicDim::aspect, a});
    for (int s = 0; s < schema.n_sentiments(); ++s)
        for (int32_t id : kw.sentiment[s]) members[id].push_back({TopicDim::sentiment, s});

    NoiseSampler noise(vocab);
    std::atomic<int64_t> processed{0};
    TrainContext tc{docs,    vocab, hp, opts, model, noise, members,
                    tokens_per_epoch * hp.epochs, processed};

    const int threads = std::max(1, opts.threads);
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        const bool full = epoch >= 1;
        std::vector<int32_t> order = nonempty;
        Rng shuffle_rng(mix_seed(hp.seed, 100 + epoch));
        shuffle_rng.shuffle(order);

        EmbedEpochStats st;
        st.epoch = epoch;
        st.warmup = !full;

        if (threads == 1) {
            train_docs(tc, order, full, Rng(mix_seed(hp.seed, 200 + epoch * 64)), st);
        } else {
            std::vector<EmbedEpochStats> parts(threads);
            std::vector<std::thread> pool;
            const size_t chunk = (order.size() + threads - 1) / threads;
            for (int t = 0; t < threads; ++t) {
                const size_t b = std::min(order.size(), t * chunk);
                const size_t e = std::min(order.size(), b + chunk);
                pool.emplace_back([&, t, b, e] {
                    parts[t].epoch = epoch;
                    train_docs(tc, std::span<const int32_t>(order).subspan(b, e - b), full,
                               Rng(mix_seed(hp.seed, 200 + epoch * 64 + t)), parts[t]);
                });
            }
            for (auto& th : pool) th.join();
            for (const auto& p : parts) {
                st.local += p.local;
                st.global += p.global;
                st.reg += p.reg;
                st.joint += p.joint;
                st.cross += p.cross;
                st.tokens += p.tokens;
            }
        }

        if (!std::isfinite(st.total(hp)) || !model.all_finite())
            throw Error("embedding training diverged at epoch " + std::to_string(epoch));

        if (stats) stats->push_back(st);
        if (log) log(format_epoch_line(st, hp));

        if (epoch == 0) init_topics(model, kw);
    }
    return model;
}

namespace {

void write_rows(std::FILE* f, const Mat& m, const std::function<std::string(int)>& name) {
    for (int r = 0; r < m.rows(); ++r) {
        std::fputs(name(r).c_str(), f);
        for (double v : m.row(r)) std::fprintf(f, " %.9g", v);
        std::fputc('\n', f);
    }
}

struct LineReader {
    std::ifstream in;
    std::string path;
    int lineno = 0;
    explicit LineReader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw ModelIoError("cannot open embedding model: " + p);
    }
    std::string next() {
        std::string line;
        if (!std::getline(in, line))
            throw ModelIoError(path + ": truncated at line " + std::to_string(lineno + 1));
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw ModelIoError(path + ":" + std::to_string(lineno) + ": " + what);
    }
};

std::string read_row(LineReader& lr, std::span<double> out) {
    std::istringstream ss(lr.next());
    std::string name;
    if (!(ss >> name)) lr.fail("empty row");
    for (double& v : out)
        if (!(ss >> v)) lr.fail("row \"" + name + "\" has too few values");
    double extra;
    if (ss >> extra) lr.fail("row \"" + name + "\" has too many values");
    return name;
}

}  // namespace

void save_embedding_model(const EmbeddingModel& model, const Vocabulary& vocab,
                          const std::string& path) {
    if (vocab.size() != model.center.rows())
        throw Error("save_embedding_model: vocabulary does not match model");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ModelIoError("cannot write embedding model: " + path);

    std::fprintf(f, "jasen-emb v1 %d %d %d %d\n", vocab.size(), model.dim,
                 model.schema.n_aspects(), model.schema.n_sentiments());
    std::fputs("WORDS\n", f);
    write_rows(f, model.center, [&](int r) { return vocab.token(r); });
    std::fputs("CONTEXT\n", f);
    write_rows(f, model.context, [&](int r) { return vocab.token(r); });
    std::fputs("DOCS\n", f);
    write_rows(f, model.doc_vectors, [](int r) { return std::to_string(r); });
    std::fputs("ASPECT_TOPICS\n", f);
    write_rows(f, model.aspect_topics, [&](int r) { return model.schema.aspects[r]; });
    std::fputs("SENT_TOPICS\n", f);
    write_rows(f, model.sentiment_topics,
               [&](int r) { return model.schema.sentiments[r]; });
    std::fputs("JOINT_TOPICS\n", f);
    write_rows(f, model.joint_topics, [&](int r) {
        return model.schema.joint_name(r / model.schema.n_aspects(),
                                       r % model.schema.n_aspects());
    });
    std::fclose(f);
}

LoadedEmbedding load_embedding_model(const std::string& path) {
    LineReader lr(path);
    std::string header = lr.next();
    std::istringstream hs(header);
    std::string magic, version;
    int n_vocab = 0, dim = 0, n_aspects = 0, n_sentiments = 0;
    hs >> magic >> version >> n_vocab >> dim >> n_aspects >> n_sentiments;
    if (magic != "jasen-emb" || version != "v1" || !hs)
        lr.fail("bad header \"" + header + "\"");
    if (n_vocab < 1 || dim < 1 || n_aspects < 1 || n_sentiments < 1)
        lr.fail("bad dimensions in header");

    auto expect_section = [&](const char* name) {
        std::string line = lr.next();
        if (line != name)
            lr.fail("expected section " + std::string(name) + ", got \"" + line + "\"");
    };

    EmbeddingModel model;
    model.dim = dim;
    model.center = Mat(n_vocab, dim);
    model.context = Mat(n_vocab, dim);
    model.aspect_topics = Mat(n_aspects, dim);
    model.sentiment_topics = Mat(n_sentiments, dim);
    model.joint_topics = Mat(n_sentiments * n_aspects, dim);

    std::vector<std::string> tokens(n_vocab);
    expect_section("WORDS");
    for (int r = 0; r < n_vocab; ++r) tokens[r] = read_row(lr, model.center.row(r));
    expect_section("CONTEXT");
    for (int r = 0; r < n_vocab; ++r) {
        std::string name = read_row(lr, model.context.row(r));
        if (name != tokens[r]) lr.fail("context row \"" + name + "\" out of order");
    }

    expect_section("DOCS");
    std::vector<std::vector<double>> doc_rows;
    for (;;) {
        std::string line = lr.next();
        if (line == "ASPECT_TOPICS") break;
        std::istringstream ss(line);
        std::string name;
        ss >> name;
        std::vector<double> row(dim);
        for (double& v : row)
            if (!(ss >> v)) lr.fail("doc row \"" + name + "\" has too few values");
        double extra;
        if (ss >> extra) lr.fail("doc row \"" + name + "\" has too many values");
        doc_rows.push_back(std::move(row));
    }
    model.doc_vectors = Mat(static_cast<int>(doc_rows.size()), dim);
    for (size_t r = 0; r < doc_rows.size(); ++r)
        std::copy(doc_rows[r].begin(), doc_rows[r].end(),
                  model.doc_vectors.row(static_cast<int>(r)).begin());

    model.schema.aspects.resize(n_aspects);
    for (int r = 0; r < n_aspects; ++r)
        model.schema.aspects[r] = read_row(lr, model.aspect_topics.row(r));
    expect_section("SENT_TOPICS");
    model.schema.sentiments.resize(n_sentiments);
    for (int r = 0; r < n_sentiments; ++r)
        model.schema.sentiments[r] = read_row(lr, model.sentiment_topics.row(r));
    expect_section("JOINT_TOPICS");
    for (int r = 0; r < n_sentiments * n_aspects; ++r) {
        std::string name = read_row(lr, model.joint_topics.row(r));
        if (name != model.schema.joint_name(r / n_aspects, r % n_aspects))
            lr.fail("joint topic row \"" + name + "\" out of order");
    }
    model.schema.aspect_keywords.resize(n_aspects);
    model.schema.sentiment_keywords.resize(n_sentiments);

    LoadedEmbedding out{std::move(model), Vocabulary::from_tokens(std::move(tokens))};
    return out;
}

}  // namespace jasen
