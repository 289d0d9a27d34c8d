#pragma once

#include <string>

#include "fusedet/detector.hpp"
#include "fusedet/registration.hpp"
#include "fusedet/synth.hpp"

namespace fusedet {

// Aggregated settings for the pipeline commands. Every value can come from a
// key=value config file plus command-line overrides; the seed is explicit
// (never wall-clock) and fans out to every seeded stage.
struct PipelineConfig {
    std::string irDir;
    std::string visDir;
    std::string labelsDir;
    std::string outDir;

    ModelConfig model;
    TrainConfig train;
    RegistrationConfig reg;
    SyntheticSceneSpec synth;

    double evalConfThresh = 0.001;
    double detectConfThresh = 0.25;
    double nmsIou = 0.45;

    uint64_t seed = 1;

    // Propagates the master seed into the per-stage configs.
    void fan_out_seed() {
        train.seed = seed;
        reg.seed = seed;
        synth.seed = seed;
    }
};

// Parses "key=value" lines; '#' starts a comment, blank lines are ignored.
// Unknown keys raise DataError.
PipelineConfig load_config(const std::string& path);

// Applies one key=value override (same keys as the file).
void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value);

}  // namespace fusedet
