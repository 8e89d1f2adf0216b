#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "psm/causal.hpp"
#include "psm/synth.hpp"

using namespace psm;
using namespace psm::test;

namespace {

SynthConfig small_config(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.n_users = 300;
    cfg.n_messages = 2'000;
    cfg.max_cascade_size = 60;
    cfg.time_span_days = 60.0;
    cfg.seed = seed;
    return cfg;
}

// Two-proportion z test, two-sided.
double two_proportion_p(double k1, double n1, double k2, double n2) {
    const double p1 = k1 / n1, p2 = k2 / n2;
    const double pool = (k1 + k2) / (n1 + n2);
    const double se = std::sqrt(pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2));
    if (se == 0.0) return 1.0;
    const double z = (p1 - p2) / se;
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("generation is deterministic per seed") {
    const SynthConfig cfg = small_config(42);
    const SynthResult a = generate(cfg);
    const SynthResult b = generate(cfg);
    CHECK(to_csv(a.log) == to_csv(b.log));
    CHECK(a.truth.labels == b.truth.labels);
    CHECK(a.implied_theta == b.implied_theta);
    SynthConfig other = cfg;
    other.seed = 43;
    CHECK(to_csv(generate(other).log) != to_csv(a.log));
}

TEST_CASE("psm label count follows the rounding rule") {
    SynthConfig cfg = small_config(1);
    cfg.n_users = 1'000;
    cfg.psm_fraction = 0.11;
    const SynthResult res = generate(cfg);
    CHECK(res.truth.psm_count() == 110);
    CHECK(res.truth.labels.size() == res.log.user_count());
}

TEST_CASE("infeasible configs are rejected") {
    SynthConfig cfg = small_config(1);
    cfg.max_cascade_size = cfg.n_users + 1;  // sizes would exceed the user count
    CHECK_THROWS_AS(generate(cfg), ConfigError);
    cfg = small_config(1);
    cfg.psm_fraction = 0.0001;  // rounds to zero planted accounts
    CHECK_THROWS_AS(generate(cfg), ConfigError);
    cfg = small_config(1);
    cfg.size_exponent = 1.0;
    CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("generated logs satisfy the action log invariants") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SynthResult res = generate(small_config(seed));
        const ActionLog& log = res.log;
        std::size_t total = 0;
        for (MessageId m = 0; m < log.message_count(); ++m) {
            const auto acts = log.message_actions(m);
            total += acts.size();
            CHECK(!acts.empty());
            CHECK(std::is_sorted(acts.begin(), acts.end(), [](const auto& a, const auto& b) {
                return std::tie(a.time, a.user) < std::tie(b.time, b.user);
            }));
            // Dedup: one action per user within a message.
            std::vector<UserId> users;
            for (const Action& a : acts) users.push_back(a.user);
            std::sort(users.begin(), users.end());
            CHECK(std::adjacent_find(users.begin(), users.end()) == users.end());
        }
        CHECK(total == log.size());
        for (const Action& a : log.actions()) CHECK(a.time >= 0);
        // Round trip through the canonical CSV.
        std::istringstream in(to_csv(log));
        CHECK(to_csv(parse_action_log(in, LogFormat::csv)) == to_csv(log));
    }
}

TEST_CASE("size histogram tail slope tracks the configured exponent") {
    SynthConfig cfg;
    cfg.n_users = 2'000;
    cfg.n_messages = 8'000;
    cfg.max_cascade_size = 500;
    cfg.size_exponent = 2.5;
    cfg.seed = 42;
    const SynthResult res = generate(cfg);
    const CascadeSet cs = extract_cascades(res.log, res.implied_theta, 0.5);
    const LogStats stats = log_stats(res.log, cs);

    // Log-log least squares over well-populated bins.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& [size, count] : stats.size_histogram) {
        if (count < 10) continue;
        const double x = std::log(static_cast<double>(size));
        const double y = std::log(static_cast<double>(count));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    REQUIRE(n >= 3);
    const double slope = (static_cast<double>(n) * sxy - sx * sy) /
                         (static_cast<double>(n) * sxx - sx * sx);
    CHECK(std::fabs(-slope - cfg.size_exponent) <= 0.3);
}

TEST_CASE("size histogram tail decreases across log-spaced bins") {
    SynthConfig cfg;
    cfg.n_users = 2'000;
    cfg.n_messages = 8'000;
    cfg.max_cascade_size = 500;
    cfg.seed = 42;
    const SynthResult res = generate(cfg);
    const CascadeSet cs = extract_cascades(res.log, res.implied_theta, 0.5);
    const LogStats stats = log_stats(res.log, cs);
    // Bin counts over [s, 2s) ranges; power-law mass must fall bin to bin.
    std::vector<std::uint64_t> bins;
    for (std::uint64_t lo = cfg.min_cascade_size; lo < cfg.max_cascade_size; lo *= 2) {
        std::uint64_t count = 0;
        for (const auto& [size, n] : stats.size_histogram)
            if (size >= lo && size < lo * 2) count += n;
        bins.push_back(count);
    }
    REQUIRE(bins.size() >= 3);
    for (std::size_t i = 1; i < bins.size(); ++i) CHECK(bins[i] < bins[i - 1]);
}

TEST_CASE("planted psm accounts have higher user rho on average") {
    const SynthResult res = generate(small_config(42));
    CausalConfig ccfg;
    ccfg.rho_mode = RhoMode::fixed;
    ccfg.rho = 0.1;
    const CausalEngine eng(res.log, extract_cascades(res.log, res.implied_theta, 0.5), ccfg);
    double sum[2] = {0, 0};
    int cnt[2] = {0, 0};
    for (UserId u = 0; u < res.log.user_count(); ++u) {
        const auto rho = eng.user_rho(u);
        if (!rho) continue;
        const int cls = res.truth.labels[u] == Label::psm ? 1 : 0;
        sum[cls] += *rho;
        ++cnt[cls];
    }
    REQUIRE(cnt[0] > 0);
    REQUIRE(cnt[1] > 0);
    CHECK(sum[1] / cnt[1] > sum[0] / cnt[0]);
}

TEST_CASE("zero early bias erases the key-user rate gap") {
    SynthConfig cfg = small_config(42);
    cfg.psm_early_bias = 0.0;
    const SynthResult res = generate(cfg);
    const CascadeSet cs = extract_cascades(res.log, res.implied_theta, 0.5);
    // Key participations vs participations, by class.
    double key[2] = {0, 0}, part[2] = {0, 0};
    for (const Cascade& c : cs.cascades()) {
        for (const Action& a : c.participants) {
            const int cls = res.truth.labels[a.user] == Label::psm ? 1 : 0;
            part[cls] += 1.0;
            if (is_key_user(c, a.user, 0.5)) key[cls] += 1.0;
        }
    }
    const double p = two_proportion_p(key[1], part[1], key[0], part[0]);
    CHECK(p > 0.01);
}

}  // TEST_SUITE
