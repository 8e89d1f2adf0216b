#pragma once

#include <cstdint>
#include <vector>

#include "psm/action_log.hpp"
#include "psm/common.hpp"

namespace psm {

struct SynthConfig {
    std::uint32_t n_users = 5'000;
    std::uint32_t n_messages = 20'000;
    double psm_fraction = 0.11;
    double viral_fraction = 0.02;     // target share of messages marked viral
    double size_exponent = 2.5;       // power-law tail of cascade sizes
    double psm_early_bias = 0.8;      // chance an early viral slot is PSM-filled
    double phi = 0.5;                 // early segment = key-user positions at this phi
    std::uint32_t cell_size = 15;     // psm campaign cell: each cell-driven viral
                                      // cascade is seeded from one cell's members
    double organic_viral_fraction = 0.3;  // viral cascades that grow without a cell
    std::uint32_t orbit_size = 50;    // recurring neighborhood pool for normal users
    double locality = 0.7;            // chance a non-seeded slot stays in the orbit
    double campaign_fraction = 1.0;   // cell cascades start within this share of the span
    std::uint32_t min_cascade_size = 10;
    std::uint32_t max_cascade_size = 60;
    double time_span_days = 90.0;
    std::uint64_t seed = 42;

    void validate() const;
};

struct GroundTruth {
    std::vector<Label> labels;  // by user id

    std::size_t psm_count() const {
        std::size_t n = 0;
        for (Label l : labels)
            if (l == Label::psm) ++n;
        return n;
    }
};

struct SynthResult {
    ActionLog log;
    GroundTruth truth;
    std::uint64_t implied_theta = 0;  // size cutoff realizing viral_fraction
};

// Seeded synthetic action log with planted PSM accounts: cascade sizes from
// a truncated discrete power law, the largest viral_fraction of cascades
// treated as viral, and their earliest (key-user) positions filled from one
// seeded PSM cell with probability psm_early_bias; every other slot draws
// uniformly from all users, so planted accounts also carry background
// activity. Cascade durations are log-uniform; a fixed seed fully determines
// the output.
SynthResult generate(const SynthConfig& config);

}  // namespace psm
