#pragma once

#include <string>

#include "jasen/training.hpp"

namespace jasen {

// Everything a run needs, assembled from defaults, an optional key=value
// config file, command-line flags, and the JASEN_SEED environment variable
// (applied last, in that order).
struct RunConfig {
    std::string corpus;
    std::string schema;
    std::string test_set;
    std::string model_dir = "model";

    EmbedHyperparams embed;
    CnnHyperparams cnn;
    int min_count = 3;
    double temperature = 20.0;
    ScoringVariant scoring = ScoringVariant::combined;
    bool no_joint = false;
    int threads = 1;
    uint64_t seed = 42;  // master seed; fans out to every random stream

    bool operator==(const RunConfig&) const = default;
};

// key=value lines, '#' comment lines, blank lines ignored. Unknown keys and
// unparsable values are ParseErrors carrying "origin:line".
RunConfig parse_config(const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::string& path);

// Emits every key; parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& c);

// Numeric-range checks shared by every subcommand.
void validate_config(const RunConfig& c);

// JASEN_SEED overrides the seed when set; malformed values are ParseErrors.
void apply_seed_env(RunConfig& c);

PipelineOptions pipeline_options(const RunConfig& c);

}  // namespace jasen
