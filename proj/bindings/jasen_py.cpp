#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <fstream>

#include "jasen/config.hpp"
#include "jasen/eval.hpp"
#include "jasen/inference.hpp"
#include "jasen/training.hpp"

namespace py = pybind11;
using namespace jasen;

namespace {

namespace fs = std::filesystem;

py::dict metrics_dict(const Metrics& m) {
    py::dict d;
    d["accuracy"] = m.accuracy;
    d["macro_precision"] = m.macro_precision;
    d["macro_recall"] = m.macro_recall;
    d["macro_f1"] = m.macro_f1;
    return d;
}

// A trained pipeline: topic embeddings plus the two distilled classifiers.
struct Model {
    EmbeddingModel embedding;
    Vocabulary vocab;
    CnnModel aspect_cnn, sentiment_cnn;
    int aspect_fallback = 0, sentiment_fallback = 0;
    bool aspect_converged = false, sentiment_converged = false;

    const TopicSchema& schema() const { return embedding.schema; }

    std::vector<int32_t> encode(const std::string& text) const {
        return encode_document(tokenize(text), vocab, 0).token_ids;
    }

    py::dict predict(const std::string& text) const {
        std::vector<int32_t> ids = encode(text);
        py::dict out;
        std::vector<double> pa(schema().n_aspects(), 0.0);
        std::vector<double> ps(schema().n_sentiments(), 0.0);
        int a = aspect_fallback, s = sentiment_fallback;
        const bool fallback = ids.empty();
        if (fallback) {
            pa[a] = 1.0;
            ps[s] = 1.0;
        } else {
            pa = cnn_forward(aspect_cnn, ids);
            ps = cnn_forward(sentiment_cnn, ids);
            a = static_cast<int>(std::max_element(pa.begin(), pa.end()) - pa.begin());
            s = static_cast<int>(std::max_element(ps.begin(), ps.end()) - ps.begin());
        }
        out["aspect"] = schema().aspects[a];
        out["sentiment"] = schema().sentiments[s];
        out["aspect_dist"] = pa;
        out["sentiment_dist"] = ps;
        out["fallback"] = fallback;
        return out;
    }

    py::dict predict_soft(const std::string& text, double temperature,
                          const std::string& scoring) const {
        SoftPrediction p =
            embed_predict(embedding, encode(text), temperature, parse_scoring(scoring));
        py::dict out;
        out["aspect"] = schema().aspects[p.aspect()];
        out["sentiment"] = schema().sentiments[p.sentiment()];
        out["aspect_dist"] = p.aspect_dist;
        out["sentiment_dist"] = p.sentiment_dist;
        return out;
    }

    std::vector<std::pair<std::string, double>> top(const std::string& topic, int n) const {
        std::vector<std::pair<std::string, double>> out;
        for (const ScoredTerm& t :
             top_terms(embedding, vocab, resolve_topic(schema(), topic), n))
            out.emplace_back(t.token, t.score);
        return out;
    }

    py::dict projection() const {
        std::string warning;
        std::vector<std::tuple<std::string, double, double>> pts;
        for (const ProjectedPoint& p : project_topics_2d(embedding, &warning))
            pts.emplace_back(p.name, p.x, p.y);
        py::dict out;
        out["points"] = pts;
        out["warning"] = warning.empty() ? py::object(py::none()) : py::cast(warning);
        return out;
    }

    py::dict evaluate(const std::vector<std::string>& test_lines) const {
        std::vector<LabeledExample> test = parse_test_set(test_lines, schema());
        auto [ma, ms] = evaluate_pipeline(test, aspect_cnn, sentiment_cnn, vocab,
                                          aspect_fallback, sentiment_fallback);
        py::dict out;
        out["aspect"] = metrics_dict(ma);
        out["sentiment"] = metrics_dict(ms);
        return out;
    }

    void save(const std::string& dir) const {
        fs::create_directories(dir);
        save_embedding_model(embedding, vocab, dir + "/embedding.txt");
        save_cnn(aspect_cnn, dir + "/cnn_aspect.jcnn");
        save_cnn(sentiment_cnn, dir + "/cnn_sentiment.jcnn");
        std::ofstream log(dir + "/train.log", std::ios::binary | std::ios::trunc);
        if (!log) throw Error("cannot write " + dir + "/train.log");
        log << "stage=pipeline aspect_fallback=" << schema().aspects[aspect_fallback]
            << " sentiment_fallback=" << schema().sentiments[sentiment_fallback]
            << " selftrain_converged_aspect=" << (aspect_converged ? 1 : 0)
            << " selftrain_converged_sentiment=" << (sentiment_converged ? 1 : 0) << '\n';
    }

    static Model load(const std::string& dir) {
        Model m;
        LoadedEmbedding le = load_embedding_model(dir + "/embedding.txt");
        m.embedding = std::move(le.model);
        m.vocab = std::move(le.vocab);
        m.aspect_cnn = load_cnn(dir + "/cnn_aspect.jcnn");
        m.sentiment_cnn = load_cnn(dir + "/cnn_sentiment.jcnn");
        std::ifstream log(dir + "/train.log");
        std::string line;
        while (log && std::getline(log, line)) {
            auto grab = [&](const std::string& key) -> std::string {
                size_t p = line.find(key + "=");
                if (p == std::string::npos) return {};
                p += key.size() + 1;
                size_t e = line.find(' ', p);
                return line.substr(p, e == std::string::npos ? std::string::npos : e - p);
            };
            const std::string a = grab("aspect_fallback"), s = grab("sentiment_fallback");
            if (a.empty() || s.empty()) continue;
            const int ai = m.schema().aspect_index(a), si = m.schema().sentiment_index(s);
            if (ai < 0 || si < 0)
                throw ModelIoError(dir + "/train.log: fallback labels \"" + a + "\"/\"" + s +
                                   "\" not in the model schema");
            m.aspect_fallback = ai;
            m.sentiment_fallback = si;
        }
        return m;
    }
};

Model train(const std::vector<std::string>& corpus_lines, const std::string& schema_text,
            int min_count, int dim, int window, double lambda_g, double lambda_r,
            int embed_epochs, int negatives, double lr_start, double lr_end, double subsample,
            double temperature, const std::string& scoring, bool no_joint, int threads,
            double cnn_lr, int batch_size, int pretrain_epochs, double pretrain_tol,
            int selftrain_epochs, double change_tol, uint64_t seed, py::object log) {
    PipelineOptions opts;
    opts.embed.dim = dim;
    opts.embed.window = window;
    opts.embed.lambda_g = lambda_g;
    opts.embed.lambda_r = lambda_r;
    opts.embed.epochs = embed_epochs;
    opts.embed.negatives = negatives;
    opts.embed.lr_start = lr_start;
    opts.embed.lr_end = lr_end;
    opts.embed.subsample = subsample;
    opts.embed.seed = seed;
    opts.cnn.lr = cnn_lr;
    opts.cnn.batch_size = batch_size;
    opts.cnn.pretrain_epochs = pretrain_epochs;
    opts.cnn.pretrain_tol = pretrain_tol;
    opts.cnn.max_selftrain_epochs = selftrain_epochs;
    opts.cnn.change_tol = change_tol;
    opts.cnn.seed = seed;
    opts.temperature = temperature;
    opts.scoring = parse_scoring(scoring);
    opts.no_joint = no_joint;
    opts.threads = threads;

    LogFn log_fn;
    if (!log.is_none())
        log_fn = [log](const std::string& line) { log(line); };

    TopicSchema schema = parse_schema(schema_text);
    EncodedCorpus corpus = encode_corpus(corpus_lines, min_count);
    PipelineResult r = run_pipeline(corpus, schema, opts, log_fn);

    Model m;
    m.embedding = std::move(r.embedding);
    m.vocab = std::move(corpus.vocab);
    m.aspect_cnn = std::move(r.aspect_cnn);
    m.sentiment_cnn = std::move(r.sentiment_cnn);
    m.aspect_fallback = r.aspect_pretrain.fallback_label;
    m.sentiment_fallback = r.sentiment_pretrain.fallback_label;
    m.aspect_converged = r.aspect_selftrain.converged;
    m.sentiment_converged = r.sentiment_selftrain.converged;
    return m;
}

}  // namespace

PYBIND11_MODULE(_jasen, mod) {
    mod.doc() = "Weakly supervised aspect and sentiment classification";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ModelIoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        } catch (const ParseError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ValidationError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const Error& e) {
            PyErr_SetString(PyExc_RuntimeError, e.what());
        }
    });

    mod.def("tokenize", &tokenize, py::arg("text"),
            "Lowercased word tokens; '###' phrase chunks stay whole");

    py::class_<Vocabulary>(mod, "Vocabulary")
        .def("__len__", &Vocabulary::size)
        .def("__contains__",
             [](const Vocabulary& v, const std::string& t) { return v.contains(t); })
        .def("id", [](const Vocabulary& v, const std::string& t) { return v.id_or(t); },
             py::arg("token"), "Token id, or -1 when absent")
        .def("token", [](const Vocabulary& v, int32_t id) { return v.token(id); },
             py::arg("id"))
        .def("count", [](const Vocabulary& v, int32_t id) { return v.count(id); },
             py::arg("id"))
        .def_property_readonly("tokens", &Vocabulary::tokens);

    mod.def(
        "build_vocabulary",
        [](const std::vector<std::string>& lines, int min_count) {
            std::vector<std::vector<std::string>> docs;
            docs.reserve(lines.size());
            for (const std::string& line : lines) docs.push_back(tokenize(line));
            return build_vocabulary(docs, min_count);
        },
        py::arg("lines"), py::arg("min_count") = 3);

    py::class_<TopicSchema>(mod, "TopicSchema")
        .def_readonly("aspects", &TopicSchema::aspects)
        .def_readonly("sentiments", &TopicSchema::sentiments)
        .def_readonly("aspect_keywords", &TopicSchema::aspect_keywords)
        .def_readonly("sentiment_keywords", &TopicSchema::sentiment_keywords)
        .def("joint_name", &TopicSchema::joint_name, py::arg("s"), py::arg("a"));

    mod.def("parse_schema", &parse_schema, py::arg("text"), py::arg("origin") = "schema");

    mod.def("compute_metrics",
            [](const std::vector<int>& predicted, const std::vector<int>& gold,
               int n_classes) { return metrics_dict(compute_metrics(predicted, gold, n_classes)); },
            py::arg("predicted"), py::arg("gold"), py::arg("n_classes"));

    py::class_<Model>(mod, "Model")
        .def_property_readonly("aspects",
                               [](const Model& m) { return m.schema().aspects; })
        .def_property_readonly("sentiments",
                               [](const Model& m) { return m.schema().sentiments; })
        .def_property_readonly("vocab", [](const Model& m) { return m.vocab; })
        .def_property_readonly("dim", [](const Model& m) { return m.embedding.dim; })
        .def_property_readonly("aspect_fallback",
                               [](const Model& m) { return m.schema().aspects[m.aspect_fallback]; })
        .def_property_readonly(
            "sentiment_fallback",
            [](const Model& m) { return m.schema().sentiments[m.sentiment_fallback]; })
        .def("predict", &Model::predict, py::arg("text"),
             "Classifier labels and distributions; empty inputs fall back to the "
             "majority pseudo-labels with probability 1.0")
        .def("predict_soft", &Model::predict_soft, py::arg("text"),
             py::arg("temperature") = 20.0, py::arg("scoring") = "combined",
             "Embedding-side soft prediction (the distillation teacher)")
        .def("top_terms", &Model::top, py::arg("topic"), py::arg("n") = 10,
             "Nearest vocabulary terms to an aspect, sentiment, or 'sentiment|aspect' topic")
        .def("projection", &Model::projection,
             "2-D projection of all topic vectors onto their top two principal axes")
        .def("evaluate", &Model::evaluate, py::arg("test_lines"),
             "Metrics on 'text<TAB>aspect<TAB>sentiment' lines")
        .def("save", &Model::save, py::arg("model_dir"))
        .def_static("load", &Model::load, py::arg("model_dir"));

    mod.def("train", &train, py::arg("corpus_lines"), py::arg("schema_text"),
            py::arg("min_count") = 3, py::arg("dim") = 100, py::arg("window") = 5,
            py::arg("lambda_g") = 2.5, py::arg("lambda_r") = 1.0,
            py::arg("embed_epochs") = 5, py::arg("negatives") = 5,
            py::arg("lr_start") = 0.025, py::arg("lr_end") = 1e-4, py::arg("subsample") = 0.0,
            py::arg("temperature") = 20.0, py::arg("scoring") = "combined",
            py::arg("no_joint") = false, py::arg("threads") = 1, py::arg("cnn_lr") = 1e-3,
            py::arg("batch_size") = 16, py::arg("pretrain_epochs") = 5,
            py::arg("pretrain_tol") = 1e-4, py::arg("selftrain_epochs") = 50,
            py::arg("change_tol") = 1e-3, py::arg("seed") = 42, py::arg("log") = py::none(),
            "Run the full pipeline: joint topic embeddings, distillation into the two "
            "classifiers, then self-training");

    mod.attr("__version__") = "0.1.0";
}
