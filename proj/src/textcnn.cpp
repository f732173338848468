#include "jasen/textcnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "jasen/error.hpp"
#include "jasen/rng.hpp"

namespace jasen {

bool CnnModel::all_finite() const {
    auto vec_ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    for (const auto& f : filters)
        if (!f.all_finite()) return false;
    for (const auto& b : filter_bias)
        if (!vec_ok(b)) return false;
    return input_embeddings.all_finite() && output_weights.all_finite() &&
           vec_ok(output_bias);
}

CnnModel make_cnn(const Mat& embeddings, int n_classes, uint64_t seed) {
    if (n_classes < 2) throw ValidationError("make_cnn: need at least 2 classes");
    if (embeddings.rows() < 1 || embeddings.cols() < 1)
        throw ValidationError("make_cnn: empty embedding matrix");

    CnnModel m;
    m.dim = embeddings.cols();
    m.n_classes = n_classes;
    m.input_embeddings = embeddings;

    Rng rng(mix_seed(seed, 1));
    auto init = [&](Mat& w, int fan_in) {
        const double s = std::sqrt(1.0 / fan_in);
        for (int r = 0; r < w.rows(); ++r)
            for (double& x : w.row(r)) x = rng.uniform(-s, s);
    };
    for (int wi = 0; wi < 3; ++wi) {
        m.filters[wi] = Mat(kMapsPerWidth, kFilterWidths[wi] * m.dim);
        init(m.filters[wi], kFilterWidths[wi] * m.dim);
        m.filter_bias[wi].assign(kMapsPerWidth, 0.0);
    }
    m.output_weights = Mat(kPooledLen, n_classes);
    init(m.output_weights, kPooledLen);
    m.output_bias.assign(n_classes, 0.0);
    return m;
}

namespace {

struct ForwardState {
    std::vector<double> pooled;   // kPooledLen
    std::vector<int> arg_pos;     // winning convolution position per map
    std::vector<double> pre_act;  // pre-ReLU value at the winning position
    std::vector<double> logq;     // log-softmax over classes
    std::vector<double> q;
};

// Embedded input row p, with zero padding past the document end.
std::span<const double> input_row(const CnnModel& m, std::span<const int32_t> ids, int p,
                                  const std::vector<double>& zeros) {
    if (p < static_cast<int>(ids.size())) return m.input_embeddings.row(ids[p]);
    return zeros;
}

ForwardState run_forward(const CnnModel& m, std::span<const int32_t> ids) {
    const int len = std::max<int>(static_cast<int>(ids.size()), kMinInputLen);
    const std::vector<double> zeros(m.dim, 0.0);

    ForwardState st;
    st.pooled.assign(kPooledLen, 0.0);
    st.arg_pos.assign(kPooledLen, 0);
    st.pre_act.assign(kPooledLen, 0.0);

    for (int wi = 0; wi < 3; ++wi) {
        const int w = kFilterWidths[wi];
        for (int f = 0; f < kMapsPerWidth; ++f) {
            auto kernel = m.filters[wi].row(f);
            double best = -1.0;
            int best_p = 0;
            double best_z = 0.0;
            for (int p = 0; p + w <= len; ++p) {
                double z = m.filter_bias[wi][f];
                for (int r = 0; r < w; ++r)
                    z += dot(kernel.subspan(static_cast<size_t>(r) * m.dim, m.dim),
                             input_row(m, ids, p + r, zeros));
                const double a = std::max(0.0, z);
                if (a > best) {
                    best = a;
                    best_p = p;
                    best_z = z;
                }
            }
            const int j = wi * kMapsPerWidth + f;
            st.pooled[j] = best;
            st.arg_pos[j] = best_p;
            st.pre_act[j] = best_z;
        }
    }

    std::vector<double> logits(m.n_classes);
    for (int c = 0; c < m.n_classes; ++c) {
        double z = m.output_bias[c];
        for (int j = 0; j < kPooledLen; ++j) z += st.pooled[j] * m.output_weights.at(j, c);
        logits[c] = z;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double lse = 0.0;
    for (double z : logits) lse += std::exp(z - mx);
    lse = mx + std::log(lse);

    st.logq.resize(m.n_classes);
    st.q.resize(m.n_classes);
    for (int c = 0; c < m.n_classes; ++c) {
        st.logq[c] = logits[c] - lse;
        st.q[c] = std::exp(st.logq[c]);
    }
    return st;
}

}  // namespace

std::vector<double> cnn_forward(const CnnModel& model, std::span<const int32_t> token_ids) {
    return run_forward(model, token_ids).q;
}

CnnGrad::CnnGrad(const CnnModel& model) {
    for (int wi = 0; wi < 3; ++wi) {
        filters[wi] = Mat(kMapsPerWidth, kFilterWidths[wi] * model.dim);
        filter_bias[wi].assign(kMapsPerWidth, 0.0);
    }
    output_weights = Mat(kPooledLen, model.n_classes);
    output_bias.assign(model.n_classes, 0.0);
}

void CnnGrad::clear() {
    for (auto& f : filters) f.fill(0.0);
    for (auto& b : filter_bias) std::fill(b.begin(), b.end(), 0.0);
    output_weights.fill(0.0);
    std::fill(output_bias.begin(), output_bias.end(), 0.0);
}

double distill_loss_grad(const CnnModel& model, std::span<const int32_t> token_ids,
                         std::span<const double> target, CnnGrad* grad) {
    if (static_cast<int>(target.size()) != model.n_classes)
        throw ValidationError("distill_loss_grad: target size does not match classes");

    ForwardState st = run_forward(model, token_ids);
    double loss = 0.0;
    for (int c = 0; c < model.n_classes; ++c) loss -= target[c] * st.logq[c];

    if (grad) {
        std::vector<double> dlogit(model.n_classes);
        for (int c = 0; c < model.n_classes; ++c) dlogit[c] = st.q[c] - target[c];

        std::vector<double> dpooled(kPooledLen, 0.0);
        for (int j = 0; j < kPooledLen; ++j) {
            for (int c = 0; c < model.n_classes; ++c) {
                grad->output_weights.at(j, c) += st.pooled[j] * dlogit[c];
                dpooled[j] += model.output_weights.at(j, c) * dlogit[c];
            }
        }
        for (int c = 0; c < model.n_classes; ++c) grad->output_bias[c] += dlogit[c];

        const std::vector<double> zeros(model.dim, 0.0);
        for (int wi = 0; wi < 3; ++wi) {
            const int w = kFilterWidths[wi];
            for (int f = 0; f < kMapsPerWidth; ++f) {
                const int j = wi * kMapsPerWidth + f;
                if (st.pre_act[j] <= 0.0 || dpooled[j] == 0.0) continue;
                const double dz = dpooled[j];
                grad->filter_bias[wi][f] += dz;
                auto gk = grad->filters[wi].row(f);
                for (int r = 0; r < w; ++r)
                    axpy(dz, input_row(model, token_ids, st.arg_pos[j] + r, zeros),
                         gk.subspan(static_cast<size_t>(r) * model.dim, model.dim));
            }
        }
    }
    return loss;
}

double distill_step(CnnModel& model, std::span<const DistillExample> batch, double lr) {
    if (batch.empty()) throw ValidationError("distill_step: empty batch");
    CnnGrad grad(model);
    double loss = 0.0;
    for (const DistillExample& ex : batch)
        loss += distill_loss_grad(model, ex.token_ids, ex.target, &grad);
    loss /= batch.size();

    const double step = lr / batch.size();
    auto apply = [&](Mat& p, const Mat& g) {
        double* pd = p.data();
        const double* gd = g.data();
        for (size_t i = 0; i < p.size(); ++i) pd[i] -= step * gd[i];
    };
    for (int wi = 0; wi < 3; ++wi) {
        apply(model.filters[wi], grad.filters[wi]);
        for (int f = 0; f < kMapsPerWidth; ++f)
            model.filter_bias[wi][f] -= step * grad.filter_bias[wi][f];
    }
    apply(model.output_weights, grad.output_weights);
    for (int c = 0; c < model.n_classes; ++c) model.output_bias[c] -= step * grad.output_bias[c];
    return loss;
}

std::vector<std::vector<double>> predict_batch(const CnnModel& model,
                                               std::span<const std::vector<int32_t>> docs) {
    std::vector<std::vector<double>> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(cnn_forward(model, d));
    return out;
}

namespace {

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, double v) {
    put_u32(buf, std::bit_cast<uint32_t>(static_cast<float>(v)));
}

void put_mat(std::string& buf, const Mat& m) {
    for (size_t i = 0; i < m.size(); ++i) put_f32(buf, m.data()[i]);
}

struct ByteReader {
    const std::string& buf;
    const std::string& path;
    size_t pos = 0;

    uint32_t u32() {
        if (pos + 4 > buf.size()) throw ModelIoError(path + ": truncated model file");
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
    void fill(Mat& m) {
        for (size_t i = 0; i < m.size(); ++i) m.data()[i] = f32();
    }
    void fill(std::vector<double>& v) {
        for (double& x : v) x = f32();
    }
};

}  // namespace

void save_cnn(const CnnModel& model, const std::string& path) {
    std::string buf;
    buf += "JCNN";
    buf.push_back('\x01');
    put_u32(buf, static_cast<uint32_t>(model.input_embeddings.rows()));
    put_u32(buf, static_cast<uint32_t>(model.dim));
    put_u32(buf, static_cast<uint32_t>(model.n_classes));
    put_mat(buf, model.input_embeddings);
    for (int wi = 0; wi < 3; ++wi) {
        put_mat(buf, model.filters[wi]);
        for (double b : model.filter_bias[wi]) put_f32(buf, b);
    }
    put_mat(buf, model.output_weights);
    for (double b : model.output_bias) put_f32(buf, b);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(buf.data(), static_cast<std::streamsize>(buf.size())))
        throw ModelIoError("cannot write model file: " + path);
}

CnnModel load_cnn(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelIoError("cannot open model file: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 5 || buf.compare(0, 4, "JCNN") != 0)
        throw ModelIoError(path + ": not a JCNN model file");
    if (buf[4] != '\x01')
        throw ModelIoError(path + ": unsupported model version " +
                           std::to_string(static_cast<int>(static_cast<unsigned char>(buf[4]))));

    ByteReader rd{buf, path, 5};
    const uint32_t vocab = rd.u32();
    const uint32_t dim = rd.u32();
    const uint32_t classes = rd.u32();
    if (vocab < 1 || dim < 1 || classes < 2 || vocab > (1u << 26) || dim > (1u << 16) ||
        classes > (1u << 16))
        throw ModelIoError(path + ": implausible model dimensions");

    CnnModel m;
    m.dim = static_cast<int>(dim);
    m.n_classes = static_cast<int>(classes);
    m.input_embeddings = Mat(static_cast<int>(vocab), m.dim);
    rd.fill(m.input_embeddings);
    for (int wi = 0; wi < 3; ++wi) {
        m.filters[wi] = Mat(kMapsPerWidth, kFilterWidths[wi] * m.dim);
        rd.fill(m.filters[wi]);
        m.filter_bias[wi].resize(kMapsPerWidth);
        rd.fill(m.filter_bias[wi]);
    }
    m.output_weights = Mat(kPooledLen, m.n_classes);
    rd.fill(m.output_weights);
    m.output_bias.resize(m.n_classes);
    rd.fill(m.output_bias);

    if (rd.pos != buf.size())
        throw ModelIoError(path + ": trailing bytes after model payload");
    if (!m.all_finite()) throw ModelIoError(path + ": non-finite parameter values");
    return m;
}

}  // namespace jasen
