#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jasen/embedding.hpp"
#include "jasen/inference.hpp"
#include "jasen/textcnn.hpp"

namespace jasen {

enum class Head { aspect, sentiment };
std::string to_string(Head h);

struct PretrainResult {
    std::vector<double> epoch_losses;
    int fallback_label = 0;  // majority argmax of the teacher's soft labels
    int n_examples = 0;
};

// Computes embedding-based soft labels once for every non-empty document, then
// trains the CNN on them over shuffled batches with early stopping. Documents
// whose soft label cannot be computed get a uniform target (logged).
PretrainResult pretrain(const std::vector<Document>& docs, const EmbeddingModel& embedding,
                        CnnModel& cnn, Head head, double temperature, ScoringVariant variant,
                        const CnnHyperparams& hp, const LogFn& log = {});

// target(P)_c = (P_c^2 / f_c) / sum_k (P_k^2 / f_k) with f_c summed over all
// rows. A class with zero f gets a zero column; a row losing all mass is an
// error. One-hot rows are exact fixed points.
std::vector<std::vector<double>> target_distribution(
    const std::vector<std::vector<double>>& predictions);

struct SelfTrainResult {
    std::vector<double> epoch_losses;
    std::vector<double> change_rates;  // fraction of documents whose argmax moved
    bool converged = false;            // stopped by change rate, not the epoch cap
};

// Per epoch: sharpen current predictions into targets, train one epoch, then
// measure how many argmax labels moved. Stops below hp.change_tol or at
// hp.max_selftrain_epochs.
SelfTrainResult self_train(const std::vector<Document>& docs, CnnModel& cnn, Head head,
                           const CnnHyperparams& hp, const LogFn& log = {});

struct PipelineOptions {
    EmbedHyperparams embed;
    CnnHyperparams cnn;
    double temperature = 20.0;
    ScoringVariant scoring = ScoringVariant::combined;
    bool no_joint = false;  // drops the joint regularizers and joint-cosine scoring
    int threads = 1;
};

struct PipelineResult {
    EmbeddingModel embedding;
    CnnModel aspect_cnn;
    CnnModel sentiment_cnn;
    std::vector<EmbedEpochStats> embed_stats;
    PretrainResult aspect_pretrain, sentiment_pretrain;
    SelfTrainResult aspect_selftrain, sentiment_selftrain;
};

// train_embeddings, then per head: pretrain + self_train. Errors are rethrown
// with the failing stage prepended.
PipelineResult run_pipeline(const EncodedCorpus& corpus, const TopicSchema& schema,
                            const PipelineOptions& opts, const LogFn& log = {});

}  // namespace jasen
