#include "psm/decay.hpp"

#include <cmath>

namespace psm {

std::vector<Window> window_sequence(Timestamp t0, Timestamp t, const DecayConfig& config) {
    config.validate();
    if (t < t0) throw DomainError("window_sequence: inverted interval");
    std::vector<Window> out;
    for (Timestamp point = t0 + config.delta; point <= t - config.delta;
         point += config.delta)
        out.push_back({point, {point - config.delta, point}});
    if (config.grid == DecayConfig::Grid::include_final && t - config.delta >= t0)
        out.push_back({t, {t - config.delta, t}});
    return out;
}

double decay_weight(Timestamp t, Timestamp t_prime, double sigma_per_day) {
    const double dist_days =
        static_cast<double>(t - t_prime) / static_cast<double>(kSecondsPerDay);
    return std::exp(-sigma_per_day * dist_days);
}

namespace {

// Shared accumulation: weighted epsilon values averaged over defined windows.
struct XiAccum {
    double sum = 0.0;
    std::uint32_t defined = 0;
    std::uint32_t skipped = 0;

    void add(std::optional<double> eps, double weight) {
        if (eps) {
            sum += weight * *eps;
            ++defined;
        } else {
            ++skipped;
        }
    }
    MetricValue result() const {
        MetricValue mv;
        mv.skipped = skipped;
        if (defined > 0) mv.value = sum / static_cast<double>(defined);
        return mv;
    }
};

}  // namespace

MetricValue xi(UserId u, Metric k, Interval interval, const ActionLog& log,
               const DecayConfig& config, std::uint64_t theta, double phi,
               const CausalConfig& causal_config) {
    const auto windows = window_sequence(interval.lo, interval.hi, config);
    if (windows.empty()) throw DomainError("xi: empty window sequence");
    XiAccum acc;
    for (const Window& w : windows) {
        ActionLog sub = log.restrict(w.range);
        CascadeSet cs = extract_cascades(sub, theta, phi);
        CausalEngine engine(std::move(sub), std::move(cs), causal_config);
        acc.add(engine.epsilon(k, u).value,
                decay_weight(interval.hi, w.point, config.sigma_per_day));
    }
    return acc.result();
}

CausalityVector decay_vector(UserId u, Interval interval, const ActionLog& log,
                             const DecayConfig& config, std::uint64_t theta, double phi,
                             const CausalConfig& causal_config) {
    const auto windows = window_sequence(interval.lo, interval.hi, config);
    if (windows.empty()) throw DomainError("decay_vector: empty window sequence");
    XiAccum acc[kMetricCount];
    for (const Window& w : windows) {
        ActionLog sub = log.restrict(w.range);
        CascadeSet cs = extract_cascades(sub, theta, phi);
        CausalEngine engine(std::move(sub), std::move(cs), causal_config);
        const double weight = decay_weight(interval.hi, w.point, config.sigma_per_day);
        for (int k = 0; k < kMetricCount; ++k)
            acc[k].add(engine.epsilon(static_cast<Metric>(k), u).value, weight);
    }
    CausalityVector v;
    v.user = u;
    v.interval = interval;
    for (int k = 0; k < kMetricCount; ++k)
        v.set(static_cast<Metric>(k), acc[k].result().value);
    return v;
}

std::vector<CausalityVector> all_decay_vectors(Interval interval, const ActionLog& log,
                                               const DecayConfig& config, std::uint64_t theta,
                                               double phi,
                                               const CausalConfig& causal_config) {
    const auto windows = window_sequence(interval.lo, interval.hi, config);
    const std::size_t n_users = log.user_count();

    std::vector<XiAccum> acc(n_users * kMetricCount);
    for (const Window& w : windows) {
        ActionLog sub = log.restrict(w.range);
        CascadeSet cs = extract_cascades(sub, theta, phi);
        CausalEngine engine(std::move(sub), std::move(cs), causal_config);
        const auto eps = engine.all_vectors(w.range);  // parallel inside
        const double weight = decay_weight(interval.hi, w.point, config.sigma_per_day);
        for (std::size_t u = 0; u < n_users; ++u)
            for (int k = 0; k < kMetricCount; ++k)
                acc[u * kMetricCount + k].add(eps[u].get(static_cast<Metric>(k)), weight);
    }

    std::vector<CausalityVector> out(n_users);
    for (std::size_t u = 0; u < n_users; ++u) {
        out[u].user = static_cast<UserId>(u);
        out[u].interval = interval;
        for (int k = 0; k < kMetricCount; ++k)
            out[u].set(static_cast<Metric>(k), acc[u * kMetricCount + k].result().value);
    }
    return out;
}

}  // namespace psm
