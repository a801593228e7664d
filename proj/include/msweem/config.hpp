#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msweem/cohort.hpp"
#include "msweem/evaluation.hpp"
#include "msweem/synthgen.hpp"

namespace msweem {

// One flat structured-text (JSON) config file drives every command; flags
// override file values. Unknown keys are rejected by name.
struct RunConfig {
    std::string experiment_id = "experiment";
    std::string dataset_path;  // empty when simulating
    bool use_synth = false;
    SynthConfig synth;
    std::string target;
    std::vector<std::string> auxiliary;
    ExperimentConfig experiment;
    std::vector<std::size_t> ablation_sizes;
    std::string rating_label;
    AlignmentConfig alignment;
    std::string out_dir = "runs/out";
    std::uint64_t seed = 1;
    bool seed_explicit = false;  // true when the file set "seed"
};

RunConfig load_config(const std::string& path);

// The fully-defaulted config as it will be echoed into the run directory;
// loading this snapshot reproduces the run.
std::string effective_config_json(const RunConfig& config);

}  // namespace msweem
