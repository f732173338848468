#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jasen/mat.hpp"

namespace jasen {

inline constexpr std::array<int, 3> kFilterWidths{2, 3, 4};
inline constexpr int kMapsPerWidth = 20;
inline constexpr int kPooledLen = kMapsPerWidth * 3;  // 60
inline constexpr int kMinInputLen = 4;                // widest filter

struct CnnHyperparams {
    double lr = 1e-3;
    int batch_size = 16;
    int pretrain_epochs = 5;
    double pretrain_tol = 1e-4;    // early stop when epoch-loss improvement drops below
    int max_selftrain_epochs = 50;
    double change_tol = 1e-3;      // stop when the label-change rate drops below
    uint64_t seed = 42;

    bool operator==(const CnnHyperparams&) const = default;
};

// Sentence classifier: frozen input embeddings, 1-D convolutions of widths
// 2/3/4 with 20 ReLU feature maps each, max-over-time pooling, linear softmax
// output. One instance per head (aspect or sentiment).
struct CnnModel {
    int dim = 0;
    int n_classes = 0;
    Mat input_embeddings;                        // |V| x dim, frozen
    std::array<Mat, 3> filters;                  // per width: 20 x (width*dim)
    std::array<std::vector<double>, 3> filter_bias;  // per width: 20
    Mat output_weights;                          // 60 x C
    std::vector<double> output_bias;             // C

    bool all_finite() const;
};

// Filters and output weights uniform in +-sqrt(1/fan_in), biases zero.
CnnModel make_cnn(const Mat& embeddings, int n_classes, uint64_t seed);

// Documents shorter than 4 tokens (empty included) are padded with zero-vector
// rows. Returns the softmax class distribution.
std::vector<double> cnn_forward(const CnnModel& model, std::span<const int32_t> token_ids);

// Gradients of the trainable parameters (input embeddings stay frozen),
// accumulated across calls.
struct CnnGrad {
    std::array<Mat, 3> filters;
    std::array<std::vector<double>, 3> filter_bias;
    Mat output_weights;
    std::vector<double> output_bias;

    explicit CnnGrad(const CnnModel& model);
    void clear();
};

// Distillation loss H(target, q) = -sum_c target_c * log q_c for one example;
// adds parameter gradients into *grad when given.
double distill_loss_grad(const CnnModel& model, std::span<const int32_t> token_ids,
                         std::span<const double> target, CnnGrad* grad = nullptr);

struct DistillExample {
    std::span<const int32_t> token_ids;
    std::span<const double> target;
};

// Mean loss over the batch; applies one plain-SGD update to the trainable
// parameters (mean-gradient step of size lr).
double distill_step(CnnModel& model, std::span<const DistillExample> batch, double lr);

std::vector<std::vector<double>> predict_batch(const CnnModel& model,
                                               std::span<const std::vector<int32_t>> docs);

// Binary format: magic "JCNN", version byte, dims, then parameter blocks in
// declared order as little-endian float32.
void save_cnn(const CnnModel& model, const std::string& path);
CnnModel load_cnn(const std::string& path);

}  // namespace jasen
