#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jasen/config.hpp"
#include "jasen/eval.hpp"
#include "jasen/inference.hpp"

namespace fs = std::filesystem;
using namespace jasen;

namespace {

// Staging area for command-line values. Every subcommand registers its options
// against these slots; merges fire only for options the user actually passed,
// so precedence is defaults < config file < flags < JASEN_SEED.
struct Store {
    std::string corpus, schema, test_set, model_dir, config_path, scoring, out, input, topic;
    int dim = 0, window = 0, embed_epochs = 0, negatives = 0, min_count = 0, threads = 0;
    int batch_size = 0, pretrain_epochs = 0, selftrain_epochs = 0, top_n = 10;
    double lambda_g = 0, lambda_r = 0, lr_start = 0, lr_end = 0, subsample = 0;
    double temperature = 0, cnn_lr = 0, pretrain_tol = 0, change_tol = 0;
    uint64_t seed = 0;
    std::vector<int> ks;

    std::vector<std::function<void(RunConfig&)>> merges;

    template <class T, class F>
    void opt(CLI::App* cmd, const char* name, T& slot, const char* desc, F apply) {
        CLI::Option* o = cmd->add_option(name, slot, desc);
        merges.push_back([o, &slot, apply](RunConfig& c) {
            if (o->count() > 0) apply(c, slot);
        });
    }

    void flag(CLI::App* cmd, const std::string& name, const std::string& desc,
              std::function<void(RunConfig&)> apply) {
        CLI::Option* o = cmd->add_flag(name, desc);
        merges.push_back([o, apply](RunConfig& c) {
            if (o->count() > 0) apply(c);
        });
    }

    RunConfig make_config() {
        RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (auto& m : merges) m(c);
        c.embed.seed = c.seed;
        c.cnn.seed = c.seed;
        apply_seed_env(c);
        validate_config(c);
        return c;
    }
};

void add_path_opts(CLI::App* cmd, Store& st, bool corpus, bool schema, bool test) {
    cmd->add_option("--config", st.config_path, "key=value config file");
    if (corpus)
        st.opt(cmd, "--corpus", st.corpus, "training corpus, one review per line",
               [](RunConfig& c, const std::string& v) { c.corpus = v; });
    if (schema)
        st.opt(cmd, "--schema", st.schema, "topic schema file",
               [](RunConfig& c, const std::string& v) { c.schema = v; });
    if (test)
        st.opt(cmd, "--test", st.test_set, "labeled test set",
               [](RunConfig& c, const std::string& v) { c.test_set = v; });
    st.opt(cmd, "--model-dir", st.model_dir, "model directory",
           [](RunConfig& c, const std::string& v) { c.model_dir = v; });
    st.opt(cmd, "--seed", st.seed, "master random seed",
           [](RunConfig& c, uint64_t v) { c.seed = v; });
}

void add_train_opts(CLI::App* cmd, Store& st) {
    st.opt(cmd, "--dim", st.dim, "embedding dimension",
           [](RunConfig& c, int v) { c.embed.dim = v; });
    st.opt(cmd, "--window", st.window, "local context half-width",
           [](RunConfig& c, int v) { c.embed.window = v; });
    st.opt(cmd, "--lambda-g", st.lambda_g, "global context weight",
           [](RunConfig& c, double v) { c.embed.lambda_g = v; });
    st.opt(cmd, "--lambda-r", st.lambda_r, "regularizer weight",
           [](RunConfig& c, double v) { c.embed.lambda_r = v; });
    st.opt(cmd, "--embed-epochs", st.embed_epochs, "embedding epochs (first is warm-up)",
           [](RunConfig& c, int v) { c.embed.epochs = v; });
    st.opt(cmd, "--negatives", st.negatives, "negative samples per pair",
           [](RunConfig& c, int v) { c.embed.negatives = v; });
    st.opt(cmd, "--lr-start", st.lr_start, "initial embedding learning rate",
           [](RunConfig& c, double v) { c.embed.lr_start = v; });
    st.opt(cmd, "--lr-end", st.lr_end, "final embedding learning rate",
           [](RunConfig& c, double v) { c.embed.lr_end = v; });
    st.opt(cmd, "--subsample", st.subsample, "frequent-word subsampling threshold",
           [](RunConfig& c, double v) { c.embed.subsample = v; });
    st.opt(cmd, "--min-count", st.min_count, "vocabulary frequency cutoff",
           [](RunConfig& c, int v) { c.min_count = v; });
    st.opt(cmd, "--temperature", st.temperature, "soft-label temperature",
           [](RunConfig& c, double v) { c.temperature = v; });
    st.opt(cmd, "--scoring", st.scoring, "combined | joint-only | marginal-only",
           [](RunConfig& c, const std::string& v) { c.scoring = parse_scoring(v); });
    st.flag(cmd, "--no-joint", "drop joint topics from training and scoring",
            [](RunConfig& c) { c.no_joint = true; });
    st.opt(cmd, "--threads", st.threads, "embedding trainer threads",
           [](RunConfig& c, int v) { c.threads = v; });
    st.opt(cmd, "--cnn-lr", st.cnn_lr, "CNN learning rate",
           [](RunConfig& c, double v) { c.cnn.lr = v; });
    st.opt(cmd, "--batch-size", st.batch_size, "CNN batch size",
           [](RunConfig& c, int v) { c.cnn.batch_size = v; });
    st.opt(cmd, "--pretrain-epochs", st.pretrain_epochs, "distillation epochs",
           [](RunConfig& c, int v) { c.cnn.pretrain_epochs = v; });
    st.opt(cmd, "--pretrain-tol", st.pretrain_tol, "pre-training early-stop tolerance",
           [](RunConfig& c, double v) { c.cnn.pretrain_tol = v; });
    st.opt(cmd, "--selftrain-epochs", st.selftrain_epochs, "self-training epoch cap",
           [](RunConfig& c, int v) { c.cnn.max_selftrain_epochs = v; });
    st.opt(cmd, "--change-tol", st.change_tol, "self-training label-change stop threshold",
           [](RunConfig& c, double v) { c.cnn.change_tol = v; });
}

void require(const std::string& value, const char* what) {
    if (value.empty())
        throw ValidationError(std::string(what) + " is required (flag or config file)");
}

struct OutStream {
    std::ofstream file;
    std::ostream* os = &std::cout;
    explicit OutStream(const std::string& path) {
        if (path.empty() || path == "-") return;
        file.open(path, std::ios::binary | std::ios::trunc);
        if (!file) throw Error("cannot write output file: " + path);
        os = &file;
    }
    std::ostream& operator*() { return *os; }
};

std::string fallback_log_line(const PipelineResult& r, const TopicSchema& schema) {
    return "stage=pipeline aspect_fallback=" +
           schema.aspects[r.aspect_pretrain.fallback_label] +
           " sentiment_fallback=" + schema.sentiments[r.sentiment_pretrain.fallback_label] +
           " selftrain_converged_aspect=" +
           std::to_string(r.aspect_selftrain.converged ? 1 : 0) +
           " selftrain_converged_sentiment=" +
           std::to_string(r.sentiment_selftrain.converged ? 1 : 0);
}

// The majority pseudo-labels recorded by cmd_train; (0, 0) when the log is
// absent or silent, with found=false so callers can warn.
struct Fallbacks {
    int aspect = 0;
    int sentiment = 0;
    bool found = false;
};

Fallbacks read_fallbacks(const std::string& model_dir, const TopicSchema& schema) {
    Fallbacks fb;
    std::ifstream in(model_dir + "/train.log");
    if (!in) return fb;
    std::string line;
    while (std::getline(in, line)) {
        auto grab = [&](const std::string& key) -> std::string {
            size_t p = line.find(key + "=");
            if (p == std::string::npos) return {};
            p += key.size() + 1;
            size_t e = line.find(' ', p);
            return line.substr(p, e == std::string::npos ? std::string::npos : e - p);
        };
        std::string a = grab("aspect_fallback"), s = grab("sentiment_fallback");
        if (a.empty() || s.empty()) continue;
        int ai = schema.aspect_index(a), si = schema.sentiment_index(s);
        if (ai < 0 || si < 0)
            throw ModelIoError(model_dir + "/train.log: fallback labels \"" + a + "\"/\"" +
                               s + "\" not in the model schema");
        fb = {ai, si, true};
    }
    return fb;
}

int cmd_build_vocab(Store& st) {
    RunConfig cfg = st.make_config();
    require(cfg.corpus, "--corpus");
    std::vector<std::vector<std::string>> docs;
    for (const std::string& line : read_lines(cfg.corpus)) docs.push_back(tokenize(line));
    Vocabulary vocab = build_vocabulary(docs, cfg.min_count);

    OutStream out(st.out);
    for (int32_t i = 0; i < vocab.size(); ++i)
        *out << vocab.token(i) << '\t' << vocab.count(i) << '\n';
    std::cerr << "vocab_size=" << vocab.size() << " total_tokens=" << vocab.total_count()
              << "\n";
    return 0;
}

int cmd_train(Store& st) {
    RunConfig cfg = st.make_config();
    require(cfg.corpus, "--corpus");
    require(cfg.schema, "--schema");

    TopicSchema schema = load_schema(cfg.schema);
    EncodedCorpus corpus = encode_corpus(read_lines(cfg.corpus), cfg.min_count);

    fs::create_directories(cfg.model_dir);
    std::ofstream log_file(cfg.model_dir + "/train.log", std::ios::binary | std::ios::trunc);
    if (!log_file) throw Error("cannot write " + cfg.model_dir + "/train.log");
    LogFn log = [&](const std::string& line) {
        log_file << line << '\n';
        std::cerr << line << '\n';
    };

    PipelineResult result = run_pipeline(corpus, schema, pipeline_options(cfg), log);
    log(fallback_log_line(result, schema));

    save_embedding_model(result.embedding, corpus.vocab, cfg.model_dir + "/embedding.txt");
    save_cnn(result.aspect_cnn, cfg.model_dir + "/cnn_aspect.jcnn");
    save_cnn(result.sentiment_cnn, cfg.model_dir + "/cnn_sentiment.jcnn");
    std::ofstream cfg_file(cfg.model_dir + "/config.txt", std::ios::binary | std::ios::trunc);
    cfg_file << serialize_config(cfg);

    std::cerr << "wrote " << cfg.model_dir
              << "/{embedding.txt,cnn_aspect.jcnn,cnn_sentiment.jcnn,train.log,config.txt}\n";
    return 0;
}

int cmd_predict(Store& st) {
    RunConfig cfg = st.make_config();
    LoadedEmbedding emb = load_embedding_model(cfg.model_dir + "/embedding.txt");
    CnnModel aspect_cnn = load_cnn(cfg.model_dir + "/cnn_aspect.jcnn");
    CnnModel sentiment_cnn = load_cnn(cfg.model_dir + "/cnn_sentiment.jcnn");
    Fallbacks fb = read_fallbacks(cfg.model_dir, emb.model.schema);

    OutStream out(st.out);
    bool warned = false;
    for (const std::string& line : read_lines(st.input)) {
        Document doc = encode_document(tokenize(line), emb.vocab, 0);
        int a, s;
        double pa, ps;
        if (doc.empty()) {
            if (!fb.found && !warned) {
                std::cerr << "warning: empty document and no recorded fallback labels; "
                             "using the first labels\n";
                warned = true;
            }
            a = fb.aspect;
            s = fb.sentiment;
            pa = ps = 1.0;
        } else {
            std::vector<double> qa = cnn_forward(aspect_cnn, doc.token_ids);
            std::vector<double> qs = cnn_forward(sentiment_cnn, doc.token_ids);
            a = 0;
            for (int c = 1; c < aspect_cnn.n_classes; ++c)
                if (qa[c] > qa[a]) a = c;
            s = 0;
            for (int c = 1; c < sentiment_cnn.n_classes; ++c)
                if (qs[c] > qs[s]) s = c;
            pa = qa[a];
            ps = qs[s];
        }
        char probs[64];
        std::snprintf(probs, sizeof(probs), "%.6f\t%.6f", ps, pa);
        *out << line << '\t' << emb.model.schema.sentiments[s] << '\t'
             << emb.model.schema.aspects[a] << '\t' << probs << '\n';
    }
    return 0;
}

int cmd_inspect(Store& st) {
    RunConfig cfg = st.make_config();
    LoadedEmbedding emb = load_embedding_model(cfg.model_dir + "/embedding.txt");
    TopicRef ref = resolve_topic(emb.model.schema, st.topic);

    OutStream out(st.out);
    for (const ScoredTerm& t : top_terms(emb.model, emb.vocab, ref, st.top_n)) {
        char score[32];
        std::snprintf(score, sizeof(score), "%.6f", t.score);
        *out << t.token << '\t' << score << '\n';
    }
    return 0;
}

int cmd_export_proj(Store& st) {
    RunConfig cfg = st.make_config();
    LoadedEmbedding emb = load_embedding_model(cfg.model_dir + "/embedding.txt");
    std::string warning;
    std::vector<ProjectedPoint> points = project_topics_2d(emb.model, &warning);
    if (!warning.empty()) std::cerr << "warning: " << warning << "\n";

    OutStream out(st.out);
    for (const ProjectedPoint& p : points) {
        char coords[80];
        std::snprintf(coords, sizeof(coords), "%.9g\t%.9g", p.x, p.y);
        *out << p.name << '\t' << coords << '\n';
    }
    return 0;
}

int cmd_evaluate(Store& st) {
    RunConfig cfg = st.make_config();
    require(cfg.test_set, "--test");
    LoadedEmbedding emb = load_embedding_model(cfg.model_dir + "/embedding.txt");
    CnnModel aspect_cnn = load_cnn(cfg.model_dir + "/cnn_aspect.jcnn");
    CnnModel sentiment_cnn = load_cnn(cfg.model_dir + "/cnn_sentiment.jcnn");
    Fallbacks fb = read_fallbacks(cfg.model_dir, emb.model.schema);

    std::vector<LabeledExample> test = load_test_set(cfg.test_set, emb.model.schema);
    auto [ma, ms] =
        evaluate_pipeline(test, aspect_cnn, sentiment_cnn, emb.vocab, fb.aspect, fb.sentiment);

    OutStream out(st.out);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-10s %9s %9s %9s %9s", "head", "accuracy", "precision",
                  "recall", "macro_f1");
    *out << buf << '\n';
    auto row = [&](const char* name, const Metrics& m) {
        std::snprintf(buf, sizeof(buf), "%-10s %9.6f %9.6f %9.6f %9.6f", name, m.accuracy,
                      m.macro_precision, m.macro_recall, m.macro_f1);
        *out << buf << '\n';
    };
    row("aspect", ma);
    row("sentiment", ms);
    *out << '\n';
    auto block = [&](const char* name, const Metrics& m) {
        std::snprintf(buf, sizeof(buf),
                      "%s_accuracy=%.6f\n%s_macro_precision=%.6f\n%s_macro_recall=%.6f\n"
                      "%s_macro_f1=%.6f\n",
                      name, m.accuracy, name, m.macro_precision, name, m.macro_recall, name,
                      m.macro_f1);
        *out << buf;
    };
    block("aspect", ma);
    block("sentiment", ms);
    return 0;
}

int cmd_sweep(Store& st) {
    RunConfig cfg = st.make_config();
    require(cfg.corpus, "--corpus");
    require(cfg.schema, "--schema");
    require(cfg.test_set, "--test");
    if (st.ks.empty()) throw ValidationError("--k requires at least one value");

    TopicSchema schema = load_schema(cfg.schema);
    std::vector<std::string> lines = read_lines(cfg.corpus);
    std::vector<LabeledExample> test = load_test_set(cfg.test_set, schema);
    LogFn log = [](const std::string& line) { std::cerr << line << '\n'; };

    std::vector<SweepRow> rows =
        keyword_sweep(lines, schema, test, st.ks, cfg.min_count, pipeline_options(cfg), log);

    OutStream out(st.out);
    *out << "k\taspect_macro_f1\tsentiment_macro_f1\n";
    for (const SweepRow& r : rows) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.6f", r.k, r.aspect.macro_f1,
                      r.sentiment.macro_f1);
        *out << buf << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weakly-supervised aspect and sentiment classification"};
    app.require_subcommand(1);
    Store st;

    CLI::App* c_vocab = app.add_subcommand("build-vocab", "Build and print the vocabulary");
    add_path_opts(c_vocab, st, true, false, false);
    st.opt(c_vocab, "--min-count", st.min_count, "vocabulary frequency cutoff",
           [](RunConfig& c, int v) { c.min_count = v; });
    c_vocab->add_option("--out", st.out, "output file (default stdout)");

    CLI::App* c_train = app.add_subcommand("train", "Train embeddings and both classifiers");
    add_path_opts(c_train, st, true, true, false);
    add_train_opts(c_train, st);

    CLI::App* c_predict = app.add_subcommand("predict", "Label reviews with a trained model");
    add_path_opts(c_predict, st, false, false, false);
    c_predict->add_option("--input", st.input, "reviews to label, one per line")->required();
    c_predict->add_option("--out", st.out, "output file (default stdout)");

    CLI::App* c_inspect = app.add_subcommand("inspect", "Show terms closest to a topic");
    add_path_opts(c_inspect, st, false, false, false);
    c_inspect->add_option("--topic", st.topic, "aspect, sentiment, or sentiment|aspect")
        ->required();
    c_inspect->add_option("-n,--top", st.top_n, "number of terms (default 10)");
    c_inspect->add_option("--out", st.out, "output file (default stdout)");

    CLI::App* c_proj = app.add_subcommand("export-proj", "Export 2-D topic projection");
    add_path_opts(c_proj, st, false, false, false);
    c_proj->add_option("--out", st.out, "output file (default stdout)");

    CLI::App* c_eval = app.add_subcommand("evaluate", "Score a trained model on a test set");
    add_path_opts(c_eval, st, false, false, true);
    c_eval->add_option("--out", st.out, "output file (default stdout)");

    CLI::App* c_sweep = app.add_subcommand("sweep-keywords", "Rerun the pipeline at several keyword counts");
    add_path_opts(c_sweep, st, true, true, true);
    add_train_opts(c_sweep, st);
    c_sweep->add_option("--k", st.ks, "keyword counts to test")->delimiter(',');
    c_sweep->add_option("--out", st.out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_vocab->parsed()) return cmd_build_vocab(st);
        if (c_train->parsed()) return cmd_train(st);
        if (c_predict->parsed()) return cmd_predict(st);
        if (c_inspect->parsed()) return cmd_inspect(st);
        if (c_proj->parsed()) return cmd_export_proj(st);
        if (c_eval->parsed()) return cmd_evaluate(st);
        if (c_sweep->parsed()) return cmd_sweep(st);
    } catch (const ParseError& e) {
        std::cerr << "jasen: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "jasen: " << e.what() << "\n";
        return 2;
    } catch (const ModelIoError& e) {
        std::cerr << "jasen: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "jasen: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
