#include "psm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace psm {

void SynthConfig::validate() const {
    if (n_users < 2) throw ConfigError("synth: need at least 2 users");
    if (n_messages < 1) throw ConfigError("synth: need at least 1 message");
    if (!(psm_fraction > 0.0 && psm_fraction < 1.0))
        throw ConfigError("synth: psm_fraction must be in (0,1)");
    if (!(viral_fraction > 0.0 && viral_fraction <= 1.0))
        throw ConfigError("synth: viral_fraction must be in (0,1]");
    if (!(size_exponent > 1.0)) throw ConfigError("synth: size_exponent must be > 1");
    if (!(psm_early_bias >= 0.0 && psm_early_bias <= 1.0))
        throw ConfigError("synth: psm_early_bias must be in [0,1]");
    if (!(phi > 0.0 && phi < 1.0)) throw ConfigError("synth: phi must be in (0,1)");
    if (cell_size < 1) throw ConfigError("synth: cell_size must be >= 1");
    if (!(organic_viral_fraction >= 0.0 && organic_viral_fraction <= 1.0))
        throw ConfigError("synth: organic_viral_fraction must be in [0,1]");
    if (orbit_size < 1) throw ConfigError("synth: orbit_size must be >= 1");
    if (!(locality >= 0.0 && locality <= 1.0))
        throw ConfigError("synth: locality must be in [0,1]");
    if (!(campaign_fraction > 0.0 && campaign_fraction <= 1.0))
        throw ConfigError("synth: campaign_fraction must be in (0,1]");
    if (max_cascade_size > n_users)
        throw ConfigError("synth: cascade sizes would exceed the user count");
    if (min_cascade_size < 2) throw ConfigError("synth: min_cascade_size must be >= 2");
    if (max_cascade_size < min_cascade_size)
        throw ConfigError("synth: max_cascade_size must be >= min_cascade_size");
    if (!(time_span_days > 0.0)) throw ConfigError("synth: time_span_days must be > 0");
    const auto n_psm = static_cast<std::uint64_t>(
        std::llround(psm_fraction * static_cast<double>(n_users)));
    if (n_psm == 0 || n_psm >= n_users)
        throw ConfigError("synth: psm_fraction leaves an empty user class");
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

}  // namespace

SynthResult generate(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);

    const std::uint32_t n_users = config.n_users;
    const auto n_psm = static_cast<std::uint32_t>(
        std::llround(config.psm_fraction * static_cast<double>(n_users)));

    // Zero-padded names keep the canonical (sorted) interning aligned with
    // the generation order.
    int user_width = 1;
    for (std::uint32_t v = n_users; v >= 10; v /= 10) ++user_width;
    int msg_width = 1;
    for (std::uint32_t v = config.n_messages; v >= 10; v /= 10) ++msg_width;
    auto pad = [](char prefix, std::uint32_t v, int width) {
        std::string s = std::to_string(v);
        return prefix + std::string(static_cast<std::size_t>(width) - s.size(), '0') + s;
    };

    // Seeded PSM assignment.
    std::vector<UserId> shuffled(n_users);
    std::iota(shuffled.begin(), shuffled.end(), 0);
    for (std::size_t i = n_users; i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[bounded(rng, i)]);
    GroundTruth truth;
    truth.labels.assign(n_users, Label::normal);
    std::vector<UserId> psm_pool(shuffled.begin(), shuffled.begin() + n_psm);
    std::sort(psm_pool.begin(), psm_pool.end());
    for (UserId u : psm_pool) truth.labels[u] = Label::psm;

    // Campaign cells: consecutive slices of the (sorted) pool.
    std::vector<std::vector<UserId>> cells;
    for (std::size_t lo = 0; lo < psm_pool.size(); lo += config.cell_size)
        cells.emplace_back(psm_pool.begin() + static_cast<std::ptrdiff_t>(lo),
                           psm_pool.begin() +
                               static_cast<std::ptrdiff_t>(
                                   std::min<std::size_t>(lo + config.cell_size,
                                                         psm_pool.size())));

    // Normal users repost within recurring neighborhoods ("orbits"); most of
    // that traffic never goes viral, which keeps their pair supports mixed.
    std::vector<UserId> normal_pool(shuffled.begin() + n_psm, shuffled.end());
    std::sort(normal_pool.begin(), normal_pool.end());
    std::vector<std::vector<UserId>> orbits;
    for (std::size_t lo = 0; lo < normal_pool.size(); lo += config.orbit_size)
        orbits.emplace_back(normal_pool.begin() + static_cast<std::ptrdiff_t>(lo),
                            normal_pool.begin() +
                                static_cast<std::ptrdiff_t>(
                                    std::min<std::size_t>(lo + config.orbit_size,
                                                          normal_pool.size())));

    // Discrete power law on [min_cascade_size, max_cascade_size] via an
    // inverse-CDF table.
    const std::uint32_t s_min = config.min_cascade_size;
    std::vector<double> cdf;
    cdf.reserve(config.max_cascade_size - s_min + 1);
    double acc = 0.0;
    for (std::uint32_t s = s_min; s <= config.max_cascade_size; ++s) {
        acc += std::pow(static_cast<double>(s), -config.size_exponent);
        cdf.push_back(acc);
    }
    auto draw_size = [&]() {
        const double r = unit_uniform(rng) * cdf.back();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), r);
        return s_min + static_cast<std::uint32_t>(it - cdf.begin());
    };

    std::vector<std::uint32_t> sizes(config.n_messages);
    for (auto& s : sizes) s = draw_size();

    // Viral cutoff: size of the n_vir-th largest cascade (ties included).
    std::vector<std::uint32_t> sorted_sizes = sizes;
    std::sort(sorted_sizes.begin(), sorted_sizes.end(), std::greater<>());
    const auto n_vir = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(config.viral_fraction * static_cast<double>(sizes.size()))));
    const std::uint64_t theta = sorted_sizes[std::min(n_vir, sorted_sizes.size()) - 1];

    const auto span_secs =
        static_cast<Timestamp>(config.time_span_days * static_cast<double>(kSecondsPerDay));
    const Timestamp min_duration = 10;
    const Timestamp max_duration = std::max<Timestamp>(min_duration + 1, span_secs / 2);

    std::vector<std::tuple<std::string, std::string, Timestamp>> rows;
    std::vector<std::uint8_t> used(n_users, 0);
    std::vector<UserId> used_list;
    std::vector<std::uint32_t> cell_cascade_count(cells.size(), 0);
    const Timestamp campaign_secs = std::max<Timestamp>(
        1, static_cast<Timestamp>(config.campaign_fraction * static_cast<double>(span_secs)));
    const std::uint32_t n_bins = std::max<Timestamp>(1, campaign_secs / (10 * kSecondsPerDay));
    for (std::uint32_t msg = 0; msg < config.n_messages; ++msg) {
        const std::uint32_t s = sizes[msg];
        const bool viral = s >= theta;
        // Positions 0..early-1 are the ones a phi-fraction key test accepts.
        const auto early =
            static_cast<std::uint32_t>(s - static_cast<std::uint32_t>(std::ceil(
                                               static_cast<double>(s) * config.phi)));

        const Timestamp duration = static_cast<Timestamp>(std::llround(
            std::exp(std::log(static_cast<double>(min_duration)) +
                     unit_uniform(rng) * (std::log(static_cast<double>(max_duration)) -
                                          std::log(static_cast<double>(min_duration))))));

        used_list.clear();
        const std::string msg_name = pad('m', msg, msg_width);
        const bool organic = viral && unit_uniform(rng) < config.organic_viral_fraction;
        const std::size_t cell_id = viral && !organic ? bounded(rng, cells.size()) : 0;

        // Campaign pushes keep a steady cadence: each cell's cascades rotate
        // through 10-day bins of the campaign window. Organic and background
        // traffic spreads over the whole timeline.
        Timestamp start;
        if (viral && !organic) {
            const std::uint32_t bin = cell_cascade_count[cell_id]++ % n_bins;
            const Timestamp bin_lo = campaign_secs / n_bins * bin;
            const Timestamp bin_len = std::max<Timestamp>(
                1, std::min<Timestamp>(campaign_secs / n_bins,
                                       campaign_secs - bin_lo) -
                       std::min<Timestamp>(duration, campaign_secs / n_bins - 1));
            start = bin_lo + static_cast<Timestamp>(
                                 bounded(rng, static_cast<std::uint64_t>(bin_len)));
        } else {
            start = static_cast<Timestamp>(bounded(
                rng, static_cast<std::uint64_t>(
                         std::max<Timestamp>(1, span_secs - duration))));
        }

        // Position -> time must be monotone so the early positions really are
        // early: endpoints pin the duration, middles are sorted draws.
        std::vector<Timestamp> times(s);
        times.front() = start;
        times.back() = start + duration;
        for (std::uint32_t pos = 1; pos + 1 < s; ++pos)
            times[pos] = start + static_cast<Timestamp>(
                                     bounded(rng, static_cast<std::uint64_t>(duration) + 1));
        std::sort(times.begin() + 1, times.end() - 1);
        const auto& cell = cells[cell_id];
        const auto& orbit = orbits[bounded(rng, orbits.size())];
        // Cell slots rotate through a per-cascade permutation so every member
        // of an active cell keeps planting throughout the campaign.
        std::vector<UserId> cell_order(cell);
        for (std::size_t i = cell_order.size(); i > 1; --i)
            std::swap(cell_order[i - 1], cell_order[bounded(rng, i)]);
        std::size_t cell_cursor = 0;
        for (std::uint32_t pos = 0; pos < s; ++pos) {
            const bool from_cell = viral && !organic && pos < early &&
                                   unit_uniform(rng) < config.psm_early_bias;
            // Organic virality starts inside an orbit; background cascades
            // stay local with probability `locality`.
            const bool from_orbit =
                !from_cell &&
                ((viral && organic && pos < early) ||
                 (!viral && unit_uniform(rng) < config.locality));
            UserId pick = 0;
            bool placed = false;
            if (from_cell) {
                while (cell_cursor < cell_order.size() && used[cell_order[cell_cursor]])
                    ++cell_cursor;
                if (cell_cursor < cell_order.size()) {
                    pick = cell_order[cell_cursor++];
                    placed = true;
                }
            } else if (from_orbit) {
                // Small pool: rejection with a quick exhaustion check.
                for (int attempt = 0; attempt < 8; ++attempt) {
                    pick = orbit[bounded(rng, orbit.size())];
                    if (!used[pick]) {
                        placed = true;
                        break;
                    }
                }
            }
            if (!placed) {
                for (int attempt = 0;; ++attempt) {
                    pick = static_cast<UserId>(bounded(rng, n_users));
                    if (!used[pick]) break;
                    if (attempt >= 64) {  // dense cascade: linear fallback scan
                        pick = (pick + 1) % n_users;
                        while (used[pick]) pick = (pick + 1) % n_users;
                        break;
                    }
                }
            }
            used[pick] = 1;
            used_list.push_back(pick);
            rows.emplace_back(pad('u', pick, user_width), msg_name, times[pos]);
        }
        for (UserId u : used_list) used[u] = 0;
    }

    SynthResult res;
    res.log = ActionLog::from_rows(std::move(rows), /*dedup=*/true);
    res.truth = std::move(truth);
    res.implied_theta = theta;
    return res;
}

}  // namespace psm
