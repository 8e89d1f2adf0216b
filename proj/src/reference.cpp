#include "psm/reference.hpp"

#include <algorithm>
#include <cmath>

namespace psm::reference {

namespace {

// Earliest posting time of u in m, if any.
std::optional<Timestamp> post_time(const ActionLog& log, MessageId m, UserId u) {
    std::optional<Timestamp> t;
    for (const Action& a : log.message_actions(m))
        if (a.user == u && (!t || a.time < *t)) t = a.time;
    return t;
}

std::vector<UserId> participants(const ActionLog& log, MessageId m) {
    std::vector<UserId> out;
    for (const Action& a : log.message_actions(m)) out.push_back(a.user);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool message_present(const ActionLog& log, MessageId m) {
    return !log.message_actions(m).empty();
}

// i precedes j in m: exists t < t' with (i,m,t) and (j,m,t').
bool precedes(const ActionLog& log, MessageId m, UserId i, UserId j) {
    for (const Action& a : log.message_actions(m)) {
        if (a.user != i) continue;
        for (const Action& b : log.message_actions(m))
            if (b.user == j && a.time < b.time) return true;
    }
    return false;
}

}  // namespace

bool viral(const ActionLog& log, MessageId m, std::uint64_t theta) {
    return log.message_actions(m).size() >= theta;
}

bool key_user(const ActionLog& log, MessageId m, UserId u, double phi) {
    const auto t = post_time(log, m, u);
    if (!t) return false;
    std::vector<UserId> after;
    for (const Action& a : log.message_actions(m))
        if (a.time > *t) after.push_back(a.user);
    std::sort(after.begin(), after.end());
    after.erase(std::unique(after.begin(), after.end()), after.end());
    return static_cast<double>(log.message_actions(m).size()) * phi <=
           static_cast<double>(after.size());
}

double prior_rho(const ActionLog& log, std::uint64_t theta, const CausalConfig& config) {
    if (config.rho_mode == RhoMode::fixed) return config.rho;
    std::uint64_t total = 0, vir = 0;
    for (MessageId m = 0; m < log.message_count(); ++m) {
        if (!message_present(log, m)) continue;
        ++total;
        if (viral(log, m, theta)) ++vir;
    }
    if (total == 0) throw DomainError("prior rho undefined on an empty message set");
    return static_cast<double>(vir) / static_cast<double>(total);
}

std::optional<double> user_rho(const ActionLog& log, UserId u, std::uint64_t theta,
                               double phi) {
    std::uint64_t den = 0, num = 0;
    for (MessageId m = 0; m < log.message_count(); ++m) {
        if (!message_present(log, m)) continue;
        if (!key_user(log, m, u, phi)) continue;
        ++den;
        if (viral(log, m, theta)) ++num;
    }
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

PairStats pair_stats(const ActionLog& log, UserId i, UserId j, std::uint64_t theta) {
    PairStats ps;
    for (MessageId m = 0; m < log.message_count(); ++m) {
        if (!message_present(log, m)) continue;
        const bool j_posted = post_time(log, m, j).has_value();
        if (!j_posted) continue;
        if (post_time(log, m, i) && precedes(log, m, i, j)) {
            ++ps.support_ij;
            if (viral(log, m, theta)) ++ps.viral_ij;
        } else {
            ++ps.support_neg;
            if (viral(log, m, theta)) ++ps.viral_neg;
        }
    }
    return ps;
}

std::vector<UserId> prima_facie_users(const ActionLog& log, MessageId m, std::uint64_t theta,
                                      double phi, const CausalConfig& config) {
    std::vector<UserId> out;
    if (!message_present(log, m) || !viral(log, m, theta)) return out;
    const double rho = prior_rho(log, theta, config);
    for (UserId u : participants(log, m)) {
        if (!key_user(log, m, u, phi)) continue;
        const auto ru = user_rho(log, u, theta, phi);
        if (ru && *ru > rho) out.push_back(u);
    }
    return out;
}

std::vector<UserId> related_users(const ActionLog& log, UserId i, std::uint64_t theta,
                                  double phi, const CausalConfig& config) {
    std::vector<UserId> out;
    for (UserId j = 0; j < log.user_count(); ++j) {
        if (j == i) continue;
        bool related = false;
        for (MessageId m = 0; m < log.message_count() && !related; ++m) {
            if (!viral(log, m, theta)) continue;
            const auto pf = prima_facie_users(log, m, theta, phi, config);
            if (std::find(pf.begin(), pf.end(), i) == pf.end()) continue;
            if (std::find(pf.begin(), pf.end(), j) == pf.end()) continue;
            if (precedes(log, m, i, j)) related = true;
        }
        if (related) out.push_back(j);
    }
    return out;
}

MetricValue epsilon(Metric k, UserId u, const ActionLog& log, std::uint64_t theta, double phi,
                    const CausalConfig& config) {
    MetricValue out;
    if (k == Metric::km || k == Metric::rel) {
        double sum = 0.0;
        std::uint32_t cnt = 0;
        for (UserId j : related_users(log, u, theta, phi, config)) {
            const PairStats ps = pair_stats(log, u, j, theta);
            const auto p = ps.p_ij();
            const auto pn = ps.p_neg_ij();
            if (!p || !pn) {
                ++out.skipped;
                continue;
            }
            if (k == Metric::km) {
                sum += *p - *pn;
                ++cnt;
            } else {
                // Eq. 6 branches, alpha infinitesimal smoothing.
                if (*p > *pn) {
                    sum += *p / (*pn + config.alpha) - 1.0;
                    ++cnt;
                } else if (*p == 0.0) {
                    ++out.skipped;
                } else {
                    sum += 1.0 - *pn / *p;
                    ++cnt;
                }
            }
        }
        if (cnt > 0) out.value = sum / static_cast<double>(cnt);
        return out;
    }

    // Neighborhood metrics over Q(u) = {i : u in R(i)}.
    double sum = 0.0, num = 0.0, den = 0.0;
    std::uint32_t cnt = 0;
    bool weights_equal = true;
    double first_w = 0.0;
    for (UserId i = 0; i < log.user_count(); ++i) {
        if (i == u) continue;
        const auto r = related_users(log, i, theta, phi, config);
        if (std::find(r.begin(), r.end(), u) == r.end()) continue;
        const MetricValue km = epsilon(Metric::km, i, log, theta, phi, config);
        if (!km.value) {
            ++out.skipped;
            continue;
        }
        const auto w = static_cast<double>(r.size());
        if (cnt == 0)
            first_w = w;
        else if (w != first_w)
            weights_equal = false;
        sum += *km.value;
        num += w * *km.value;
        den += w;
        ++cnt;
    }
    if (cnt == 0) return out;
    if (k == Metric::nb || weights_equal)
        out.value = sum / static_cast<double>(cnt);
    else
        out.value = num / den;
    return out;
}

MetricValue xi(Metric k, UserId u, const ActionLog& log, Interval interval,
               const DecayConfig& decay_config, std::uint64_t theta, double phi,
               const CausalConfig& config) {
    MetricValue out;
    double sum = 0.0;
    std::uint32_t cnt = 0;
    // T = {t' = t0 + j*delta, j in N, t' <= t - delta}, window [t'-delta, t'].
    std::vector<Timestamp> points;
    for (Timestamp p = interval.lo + decay_config.delta; p <= interval.hi - decay_config.delta;
         p += decay_config.delta)
        points.push_back(p);
    if (decay_config.grid == DecayConfig::Grid::include_final &&
        interval.hi - decay_config.delta >= interval.lo)
        points.push_back(interval.hi);
    if (points.empty()) throw DomainError("xi: empty window sequence");
    for (Timestamp p : points) {
        const ActionLog window = log.restrict({p - decay_config.delta, p});
        const MetricValue eps = epsilon(k, u, window, theta, phi, config);
        if (!eps.value) {
            ++out.skipped;
            continue;
        }
        const double dist_days = static_cast<double>(interval.hi - p) /
                                 static_cast<double>(kSecondsPerDay);
        sum += std::exp(-decay_config.sigma_per_day * dist_days) * *eps.value;
        ++cnt;
    }
    if (cnt > 0) out.value = sum / static_cast<double>(cnt);
    return out;
}

std::vector<CausalityVector> all_vectors(const ActionLog& log, std::uint64_t theta, double phi,
                                         const CausalConfig& config) {
    std::vector<CausalityVector> out(log.user_count());
    for (UserId u = 0; u < log.user_count(); ++u) {
        out[u].user = u;
        out[u].interval = log.time_span();
        for (int k = 0; k < kMetricCount; ++k)
            out[u].set(static_cast<Metric>(k),
                       epsilon(static_cast<Metric>(k), u, log, theta, phi, config).value);
    }
    return out;
}

}  // namespace psm::reference
