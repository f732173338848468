#include "jasen/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace jasen {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct ValueParser {
    const std::string& origin;
    int line;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(origin + ":" + std::to_string(line) + ": " + what);
    }
    double num(const std::string& v) const {
        errno = 0;
        char* end = nullptr;
        double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0' || errno == ERANGE)
            fail("not a number: \"" + v + "\"");
        return d;
    }
    int integer(const std::string& v) const {
        double d = num(v);
        int i = static_cast<int>(d);
        if (static_cast<double>(i) != d) fail("not an integer: \"" + v + "\"");
        return i;
    }
    uint64_t u64(const std::string& v) const {
        errno = 0;
        char* end = nullptr;
        unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0' || errno == ERANGE || v[0] == '-')
            fail("not an unsigned integer: \"" + v + "\"");
        return x;
    }
    bool boolean(const std::string& v) const {
        if (v == "1" || v == "true") return true;
        if (v == "0" || v == "false") return false;
        fail("not a boolean (use true/false/1/0): \"" + v + "\"");
    }
};

bool apply_key(RunConfig& c, const std::string& key, const std::string& val,
               const ValueParser& p) {
    if (key == "corpus") c.corpus = val;
    else if (key == "schema") c.schema = val;
    else if (key == "test_set") c.test_set = val;
    else if (key == "model_dir") c.model_dir = val;
    else if (key == "dim") c.embed.dim = p.integer(val);
    else if (key == "window") c.embed.window = p.integer(val);
    else if (key == "lambda_g") c.embed.lambda_g = p.num(val);
    else if (key == "lambda_r") c.embed.lambda_r = p.num(val);
    else if (key == "embed_epochs") c.embed.epochs = p.integer(val);
    else if (key == "negatives") c.embed.negatives = p.integer(val);
    else if (key == "lr_start") c.embed.lr_start = p.num(val);
    else if (key == "lr_end") c.embed.lr_end = p.num(val);
    else if (key == "subsample") c.embed.subsample = p.num(val);
    else if (key == "min_count") c.min_count = p.integer(val);
    else if (key == "temperature") c.temperature = p.num(val);
    else if (key == "scoring") {
        try {
            c.scoring = parse_scoring(val);
        } catch (const Error& e) {
            p.fail(e.what());
        }
    } else if (key == "no_joint") c.no_joint = p.boolean(val);
    else if (key == "threads") c.threads = p.integer(val);
    else if (key == "seed") c.seed = p.u64(val);
    else if (key == "cnn_lr") c.cnn.lr = p.num(val);
    else if (key == "batch_size") c.cnn.batch_size = p.integer(val);
    else if (key == "pretrain_epochs") c.cnn.pretrain_epochs = p.integer(val);
    else if (key == "pretrain_tol") c.cnn.pretrain_tol = p.num(val);
    else if (key == "selftrain_epochs") c.cnn.max_selftrain_epochs = p.integer(val);
    else if (key == "change_tol") c.cnn.change_tol = p.num(val);
    else return false;
    return true;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        ValueParser p{origin, lineno};
        size_t eq = t.find('=');
        if (eq == std::string::npos) p.fail("expected key=value, got \"" + t + "\"");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty()) p.fail("empty key");
        if (!apply_key(c, key, val, p)) p.fail("unknown config key \"" + key + "\"");
    }
    c.embed.seed = c.seed;
    c.cnn.seed = c.seed;
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "corpus=" << c.corpus << "\n"
        << "schema=" << c.schema << "\n"
        << "test_set=" << c.test_set << "\n"
        << "model_dir=" << c.model_dir << "\n"
        << "dim=" << c.embed.dim << "\n"
        << "window=" << c.embed.window << "\n"
        << "lambda_g=" << num(c.embed.lambda_g) << "\n"
        << "lambda_r=" << num(c.embed.lambda_r) << "\n"
        << "embed_epochs=" << c.embed.epochs << "\n"
        << "negatives=" << c.embed.negatives << "\n"
        << "lr_start=" << num(c.embed.lr_start) << "\n"
        << "lr_end=" << num(c.embed.lr_end) << "\n"
        << "subsample=" << num(c.embed.subsample) << "\n"
        << "min_count=" << c.min_count << "\n"
        << "temperature=" << num(c.temperature) << "\n"
        << "scoring=" << to_string(c.scoring) << "\n"
        << "no_joint=" << (c.no_joint ? "true" : "false") << "\n"
        << "threads=" << c.threads << "\n"
        << "seed=" << c.seed << "\n"
        << "cnn_lr=" << num(c.cnn.lr) << "\n"
        << "batch_size=" << c.cnn.batch_size << "\n"
        << "pretrain_epochs=" << c.cnn.pretrain_epochs << "\n"
        << "pretrain_tol=" << num(c.cnn.pretrain_tol) << "\n"
        << "selftrain_epochs=" << c.cnn.max_selftrain_epochs << "\n"
        << "change_tol=" << num(c.cnn.change_tol) << "\n";
    return out.str();
}

void validate_config(const RunConfig& c) {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ValidationError(std::string("config: ") + what);
    };
    need(c.embed.dim >= 1, "dim must be >= 1");
    need(c.embed.window >= 1, "window must be >= 1");
    need(c.embed.lambda_g >= 0.0, "lambda_g must be >= 0");
    need(c.embed.lambda_r >= 0.0, "lambda_r must be >= 0");
    need(c.embed.epochs >= 1, "embed_epochs must be >= 1");
    need(c.embed.negatives >= 1, "negatives must be >= 1");
    need(c.embed.lr_start > 0.0, "lr_start must be > 0");
    need(c.embed.lr_end > 0.0 && c.embed.lr_end <= c.embed.lr_start,
         "lr_end must be in (0, lr_start]");
    need(c.embed.subsample >= 0.0, "subsample must be >= 0");
    need(c.min_count >= 1, "min_count must be >= 1");
    need(c.temperature > 0.0, "temperature must be > 0");
    need(c.threads >= 1, "threads must be >= 1");
    need(c.cnn.lr > 0.0, "cnn_lr must be > 0");
    need(c.cnn.batch_size >= 1, "batch_size must be >= 1");
    need(c.cnn.pretrain_epochs >= 1, "pretrain_epochs must be >= 1");
    need(c.cnn.pretrain_tol >= 0.0, "pretrain_tol must be >= 0");
    need(c.cnn.max_selftrain_epochs >= 1, "selftrain_epochs must be >= 1");
    need(c.cnn.change_tol >= 0.0, "change_tol must be >= 0");
}

void apply_seed_env(RunConfig& c) {
    const char* env = std::getenv("JASEN_SEED");
    if (!env) return;
    ValueParser p{"JASEN_SEED", 1};
    c.seed = p.u64(env);
    c.embed.seed = c.seed;
    c.cnn.seed = c.seed;
}

PipelineOptions pipeline_options(const RunConfig& c) {
    PipelineOptions o;
    o.embed = c.embed;
    o.embed.seed = c.seed;
    o.cnn = c.cnn;
    o.cnn.seed = c.seed;
    o.temperature = c.temperature;
    o.scoring = c.scoring;
    o.no_joint = c.no_joint;
    o.threads = c.threads;
    return o;
}

}  // namespace jasen
