#include "jasen/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "jasen/rng.hpp"

namespace jasen {

std::string to_string(Head h) { return h == Head::aspect ? "aspect" : "sentiment"; }

namespace {

uint64_t head_tag(Head h, uint64_t base) { return base + (h == Head::aspect ? 0 : 1000); }

std::vector<const Document*> nonempty_docs(const std::vector<Document>& docs) {
    std::vector<const Document*> out;
    for (const Document& d : docs)
        if (!d.empty()) out.push_back(&d);
    return out;
}

// One SGD epoch over shuffled batches; returns the per-example mean loss.
double run_epoch(CnnModel& cnn, const std::vector<const Document*>& docs,
                 const std::vector<std::vector<double>>& targets, const CnnHyperparams& hp,
                 Rng& rng) {
    std::vector<int32_t> order(docs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int32_t>(i);
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::vector<DistillExample> batch;
    for (size_t b = 0; b < order.size(); b += hp.batch_size) {
        batch.clear();
        const size_t e = std::min(order.size(), b + hp.batch_size);
        for (size_t i = b; i < e; ++i)
            batch.push_back({docs[order[i]]->token_ids, targets[order[i]]});
        loss_sum += distill_step(cnn, batch, hp.lr) * batch.size();
    }
    return loss_sum / docs.size();
}

std::vector<int> argmax_labels(const CnnModel& cnn, const std::vector<const Document*>& docs,
                               std::vector<std::vector<double>>* preds_out = nullptr) {
    std::vector<int> labels(docs.size());
    if (preds_out) preds_out->resize(docs.size());
    for (size_t i = 0; i < docs.size(); ++i) {
        std::vector<double> q = cnn_forward(cnn, docs[i]->token_ids);
        int best = 0;
        for (int c = 1; c < cnn.n_classes; ++c)
            if (q[c] > q[best]) best = c;
        labels[i] = best;
        if (preds_out) (*preds_out)[i] = std::move(q);
    }
    return labels;
}

std::string fmt(const char* pattern, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, args...);
    return buf;
}

}  // namespace

PretrainResult pretrain(const std::vector<Document>& docs, const EmbeddingModel& embedding,
                        CnnModel& cnn, Head head, double temperature, ScoringVariant variant,
                        const CnnHyperparams& hp, const LogFn& log) {
    if (hp.lr <= 0.0 || hp.batch_size < 1 || hp.pretrain_epochs < 1)
        throw ValidationError("pretrain: hyperparameters out of range");
    auto live = nonempty_docs(docs);
    if (live.empty()) throw Error("pretrain: corpus has no non-empty document");

    const int n_classes = cnn.n_classes;
    std::vector<std::vector<double>> targets(live.size());
    std::vector<int64_t> votes(n_classes, 0);
    for (size_t i = 0; i < live.size(); ++i) {
        try {
            SoftPrediction p = embed_predict(embedding, live[i]->token_ids, temperature, variant);
            targets[i] = head == Head::aspect ? std::move(p.aspect_dist)
                                              : std::move(p.sentiment_dist);
        } catch (const Error&) {
            targets[i].assign(n_classes, 1.0 / n_classes);
            if (log)
                log("stage=pretrain head=" + to_string(head) + " warn=\"uniform soft label for doc " +
                    std::to_string(live[i]->doc_id) + "\"");
        }
        int best = 0;
        for (int c = 1; c < n_classes; ++c)
            if (targets[i][c] > targets[i][best]) best = c;
        ++votes[best];
    }

    PretrainResult res;
    res.n_examples = static_cast<int>(live.size());
    res.fallback_label =
        static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());

    double prev = 0.0;
    for (int epoch = 0; epoch < hp.pretrain_epochs; ++epoch) {
        Rng rng(mix_seed(hp.seed, head_tag(head, 300) + epoch));
        const double loss = run_epoch(cnn, live, targets, hp, rng);
        res.epoch_losses.push_back(loss);
        if (log)
            log(fmt("stage=pretrain head=%s epoch=%d loss=%.6g", to_string(head).c_str(),
                    epoch, loss));
        if (epoch >= 1 && prev - loss < hp.pretrain_tol) break;
        prev = loss;
    }
    if (!cnn.all_finite()) throw Error("pretrain: model diverged");
    return res;
}

std::vector<std::vector<double>> target_distribution(
    const std::vector<std::vector<double>>& predictions) {
    if (predictions.empty()) return {};
    const size_t n_classes = predictions[0].size();
    std::vector<double> f(n_classes, 0.0);
    for (const auto& p : predictions) {
        if (p.size() != n_classes)
            throw ValidationError("target_distribution: ragged prediction rows");
        for (size_t c = 0; c < n_classes; ++c) f[c] += p[c];
    }

    std::vector<std::vector<double>> out(predictions.size());
    for (size_t i = 0; i < predictions.size(); ++i) {
        std::vector<double> t(n_classes, 0.0);
        double sum = 0.0;
        for (size_t c = 0; c < n_classes; ++c) {
            if (f[c] > 0.0) t[c] = predictions[i][c] * predictions[i][c] / f[c];
            sum += t[c];
        }
        if (sum <= 0.0)
            throw Error("target_distribution: row " + std::to_string(i) +
                        " lost all probability mass");
        for (double& v : t) v /= sum;
        out[i] = std::move(t);
    }
    return out;
}

SelfTrainResult self_train(const std::vector<Document>& docs, CnnModel& cnn, Head head,
                           const CnnHyperparams& hp, const LogFn& log) {
    if (hp.max_selftrain_epochs < 1 || hp.change_tol < 0.0 || hp.batch_size < 1)
        throw ValidationError("self_train: hyperparameters out of range");
    auto live = nonempty_docs(docs);
    if (live.empty()) throw Error("self_train: corpus has no non-empty document");

    SelfTrainResult res;
    std::vector<std::vector<double>> preds;
    std::vector<int> labels = argmax_labels(cnn, live, &preds);

    for (int epoch = 0; epoch < hp.max_selftrain_epochs; ++epoch) {
        std::vector<std::vector<double>> targets = target_distribution(preds);
        Rng rng(mix_seed(hp.seed, head_tag(head, 500) + epoch));
        const double loss = run_epoch(cnn, live, targets, hp, rng);

        std::vector<int> new_labels = argmax_labels(cnn, live, &preds);
        int changed = 0;
        for (size_t i = 0; i < labels.size(); ++i)
            if (new_labels[i] != labels[i]) ++changed;
        const double rate = static_cast<double>(changed) / labels.size();
        labels = std::move(new_labels);

        res.epoch_losses.push_back(loss);
        res.change_rates.push_back(rate);
        if (log)
            log(fmt("stage=selftrain head=%s epoch=%d loss=%.6g change_rate=%.6g",
                    to_string(head).c_str(), epoch, loss, rate));
        if (rate < hp.change_tol) {
            res.converged = true;
            break;
        }
    }
    if (!cnn.all_finite()) throw Error("self_train: model diverged");
    return res;
}

namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        throw ParseError(std::string(name) + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(name) + ": " + e.what());
    } catch (const ModelIoError& e) {
        throw ModelIoError(std::string(name) + ": " + e.what());
    } catch (const Error& e) {
        throw Error(std::string(name) + ": " + e.what());
    }
}

}  // namespace

PipelineResult run_pipeline(const EncodedCorpus& corpus, const TopicSchema& schema,
                            const PipelineOptions& opts, const LogFn& log) {
    PipelineResult res;
    const ScoringVariant variant =
        opts.no_joint ? ScoringVariant::marginal_only : opts.scoring;

    res.embedding = stage("embedding", [&] {
        EmbedTrainOptions eo;
        eo.no_joint = opts.no_joint;
        eo.threads = opts.threads;
        return train_embeddings(corpus.docs, corpus.vocab, schema, opts.embed, eo, log,
                                &res.embed_stats);
    });

    CnnHyperparams asp_hp = opts.cnn, sen_hp = opts.cnn;
    res.aspect_cnn = make_cnn(res.embedding.center, schema.n_aspects(),
                              mix_seed(opts.cnn.seed, 70));
    res.sentiment_cnn = make_cnn(res.embedding.center, schema.n_sentiments(),
                                 mix_seed(opts.cnn.seed, 71));

    res.aspect_pretrain = stage("pretrain-aspect", [&] {
        return pretrain(corpus.docs, res.embedding, res.aspect_cnn, Head::aspect,
                        opts.temperature, variant, asp_hp, log);
    });
    res.sentiment_pretrain = stage("pretrain-sentiment", [&] {
        return pretrain(corpus.docs, res.embedding, res.sentiment_cnn, Head::sentiment,
                        opts.temperature, variant, sen_hp, log);
    });
    res.aspect_selftrain = stage("selftrain-aspect", [&] {
        return self_train(corpus.docs, res.aspect_cnn, Head::aspect, asp_hp, log);
    });
    res.sentiment_selftrain = stage("selftrain-sentiment", [&] {
        return self_train(corpus.docs, res.sentiment_cnn, Head::sentiment, sen_hp, log);
    });
    return res;
}

}  // namespace jasen
