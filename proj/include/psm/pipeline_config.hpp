#pragma once

#include <string>

#include "psm/causal.hpp"
#include "psm/classify.hpp"
#include "psm/decay.hpp"
#include "psm/synth.hpp"

namespace psm {

// One declarative document collecting every module's knobs; flat sections
// per module, unknown keys rejected, parse/serialize round-trips.
struct PipelineConfig {
    // cascade
    std::uint64_t theta = 100;
    double phi = 0.5;
    // causal
    CausalConfig causal;
    // decay
    DecayConfig decay;
    // classify
    ThresholdRule thresholds;
    std::size_t k = 10;
    // evaluate
    std::size_t folds = 10;
    Timestamp period_length = 10 * kSecondsPerDay;
    double train_fraction = 0.5;
    // synth
    SynthConfig synth;
    // run
    std::uint64_t seed = 42;
    int threads = 0;  // 0: library default

    static PipelineConfig from_json_text(const std::string& text);
    std::string to_json_text() const;

    void validate() const;
};

}  // namespace psm
