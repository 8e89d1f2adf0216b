#pragma once

#include <vector>

#include "psm/causal.hpp"

namespace psm {

struct DecayConfig {
    Timestamp delta = 5 * kSecondsPerDay;  // sliding-window length
    double sigma_per_day = 0.001;          // exponential decay scale, per-day units
    enum class Grid {
        strict,   // T = {t' = t0 + j*delta, j >= 1, t' <= t - delta}
        include_final  // additionally appends the most recent window [t-delta, t]
    } grid = Grid::strict;

    void validate() const {
        if (delta <= 0) throw ConfigError("delta must be > 0");
        if (sigma_per_day < 0.0) throw ConfigError("sigma must be >= 0");
    }
};

// One sliding window: the grid point t' and the range [t' - delta, t'].
struct Window {
    Timestamp point = 0;
    Interval range{0, -1};
};

// Evaluates the window grid over [t0, t]. Returns an empty sequence when the
// interval is shorter than two window lengths (strict grid).
std::vector<Window> window_sequence(Timestamp t0, Timestamp t, const DecayConfig& config);

// Weight of a window ending at t' inside [t0, t]: e^{-sigma * (t - t')}
// with the distance measured in days.
double decay_weight(Timestamp t, Timestamp t_prime, double sigma_per_day);

// Time-decay causality: per-window epsilon values weighted by decay_weight
// and averaged over the windows where epsilon is defined. `skipped` counts
// undefined windows. An empty window sequence is a domain error.
MetricValue xi(UserId u, Metric k, Interval interval, const ActionLog& log,
               const DecayConfig& config, std::uint64_t theta, double phi,
               const CausalConfig& causal_config);

// All four decay metrics for one user.
CausalityVector decay_vector(UserId u, Interval interval, const ActionLog& log,
                             const DecayConfig& config, std::uint64_t theta, double phi,
                             const CausalConfig& causal_config);

// Batch variant over every user id. Builds one engine per window and reduces
// in window order, so results are identical for any thread count.
std::vector<CausalityVector> all_decay_vectors(Interval interval, const ActionLog& log,
                                               const DecayConfig& config, std::uint64_t theta,
                                               double phi, const CausalConfig& causal_config);

}  // namespace psm
