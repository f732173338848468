#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jasen/corpus.hpp"
#include "jasen/mat.hpp"

namespace jasen {

struct EmbedHyperparams {
    int dim = 100;
    int window = 5;          // local context half-width h
    double lambda_g = 2.5;   // global-context weight
    double lambda_r = 1.0;   // shared weight of all regularizer terms
    int epochs = 5;          // first epoch is context-only warm-up
    int negatives = 5;       // per positive pair
    double lr_start = 0.025;
    double lr_end = 1e-4;    // linear decay target
    double subsample = 0.0;  // frequent-word discard threshold; 0 disables
    uint64_t seed = 42;

    bool operator==(const EmbedHyperparams&) const = default;
};

struct EmbeddingModel {
    int dim = 0;
    TopicSchema schema;      // labels; keyword lists may be empty on loaded models
    Mat center;              // |V| x dim
    Mat context;             // |V| x dim
    Mat doc_vectors;         // |D| x dim, trained under the global objective
    Mat aspect_topics;       // |A| x dim
    Mat sentiment_topics;    // |S| x dim
    Mat joint_topics;        // (|S|*|A|) x dim, row-major over (s, a)

    int joint_row(int s, int a) const { return s * schema.n_aspects() + a; }
    bool all_finite() const {
        return center.all_finite() && context.all_finite() && doc_vectors.all_finite() &&
               aspect_topics.all_finite() && sentiment_topics.all_finite() &&
               joint_topics.all_finite();
    }
};

// Center rows uniform in [-0.5/dim, 0.5/dim); everything else zero.
EmbeddingModel make_embedding_model(int vocab_size, int n_docs, int dim,
                                    const TopicSchema& schema, uint64_t seed);

// Gradient consumer for the loss ops: the trainer applies SGD steps, tests
// collect. The same row may be reported several times; contributions add.
struct GradSink {
    virtual void add(Mat& m, int row, std::span<const double> grad) = 0;
    virtual ~GradSink() = default;
};

// Negative-sampling form of the local-context objective:
//   loss = -log sig(v_j.u_i) - sum_n log sig(-v_n.u_i)
double local_loss_grad(EmbeddingModel& model, int32_t center_word, int32_t context_word,
                       std::span<const int32_t> negatives, GradSink* sink = nullptr);

// Full-softmax oracle over the whole context matrix; tiny vocabularies only.
double local_loss_exact(EmbeddingModel& model, int32_t center_word, int32_t context_word,
                        GradSink* sink = nullptr);

// Same objective shape with document vectors in the context role.
double global_loss_grad(EmbeddingModel& model, int32_t word, int32_t doc,
                        std::span<const int32_t> negative_docs, GradSink* sink = nullptr);
double global_loss_exact(EmbeddingModel& model, int32_t word, int32_t doc,
                         GradSink* sink = nullptr);

// softmax of u_word against every row of `topics`
std::vector<double> topic_posterior(const EmbeddingModel& model, int32_t word,
                                    const Mat& topics);

// -log P(t_own | keyword) under the pure-topic posterior.
double pure_reg_loss_grad(EmbeddingModel& model, int32_t keyword, int owning_topic,
                          Mat& topics, GradSink* sink = nullptr);

// -log of the marginal mass on owning_label after softmax over all joint topics.
double joint_reg_loss_grad(EmbeddingModel& model, int32_t keyword, int owning_label,
                           TopicDim dim, GradSink* sink = nullptr);

// KL(U || P(t_other | keyword)) over the pure topics of the irrelevant dimension.
double cross_reg_loss_grad(EmbeddingModel& model, int32_t keyword, TopicDim other_dim,
                           GradSink* sink = nullptr);

// t_a / t_s = mean center vector of their keyword lists; t_<s,a> = midpoint.
void init_topics(EmbeddingModel& model, const KeywordIds& keywords);

struct EmbedEpochStats {
    int epoch = 0;
    bool warmup = false;
    double local = 0, global = 0, reg = 0, joint = 0, cross = 0;
    int64_t tokens = 0;
    double total(const EmbedHyperparams& hp) const {
        return local + hp.lambda_g * global + hp.lambda_r * (reg + joint + cross);
    }
};

struct EmbedTrainOptions {
    bool no_joint = false;  // drop the joint and cross regularizers
    int threads = 1;        // >1: relaxed hogwild updates, convergence-only contract
};

using LogFn = std::function<void(const std::string&)>;

// Epoch 0 trains contexts only, then topics are initialized from keyword
// averages and the remaining epochs run the full objective. Single-threaded
// runs are bit-reproducible for a fixed seed.
EmbeddingModel train_embeddings(const std::vector<Document>& docs, const Vocabulary& vocab,
                                const TopicSchema& schema, const EmbedHyperparams& hp,
                                const EmbedTrainOptions& opts = {}, const LogFn& log = {},
                                std::vector<EmbedEpochStats>* stats = nullptr);

// Text format, 9 significant digits, byte-stable across save/load/save.
void save_embedding_model(const EmbeddingModel& model, const Vocabulary& vocab,
                          const std::string& path);
struct LoadedEmbedding {
    EmbeddingModel model;
    Vocabulary vocab;
};
LoadedEmbedding load_embedding_model(const std::string& path);

}  // namespace jasen
