#include "psm/causal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace psm {

std::optional<double> relative_likelihood_term(double p, double pneg, double alpha) {
    if (p > pneg) return p / (pneg + alpha) - 1.0;
    if (p == 0.0) return std::nullopt;  // second branch divides by p
    return 1.0 - pneg / p;
}

CausalEngine::CausalEngine(ActionLog log, CascadeSet cascades, CausalConfig config)
    : log_(std::move(log)), cascades_(std::move(cascades)), config_(config) {
    config_.validate();
    const std::size_t n_users = log_.user_count();
    const auto& casc = cascades_.cascades();

    // Dedup'ed participants (earliest action per user) and key flags.
    part_offsets_.assign(casc.size() + 1, 0);
    std::vector<std::uint32_t> stamp(n_users, 0);
    std::uint32_t epoch = 0;
    for (std::size_t c = 0; c < casc.size(); ++c) {
        ++epoch;
        std::uint64_t kept = 0;
        for (const Action& a : casc[c].participants) {
            if (stamp[a.user] == epoch) continue;
            stamp[a.user] = epoch;
            part_users_.push_back(a.user);
            part_times_.push_back(a.time);
            ++kept;
        }
        part_offsets_[c + 1] = part_offsets_[c] + kept;
    }
    part_key_.assign(part_users_.size(), 0);

    key_total_.assign(n_users, 0);
    key_viral_.assign(n_users, 0);
    const double phi = cascades_.phi();
    for (std::size_t c = 0; c < casc.size(); ++c) {
        const std::uint64_t lo = part_offsets_[c], hi = part_offsets_[c + 1];
        const auto n = static_cast<double>(hi - lo);
        const Timestamp* times = part_times_.data() + lo;
        const auto len = static_cast<std::ptrdiff_t>(hi - lo);
        for (std::uint64_t p = lo; p < hi; ++p) {
            // Distinct users strictly after this one; entries are unique users
            // sorted by time, so a positional count suffices.
            const auto first_later =
                std::upper_bound(times, times + len, part_times_[p]) - times;
            const auto later = static_cast<double>(len - first_later);
            if (n * phi <= later) {
                part_key_[p] = 1;
                ++key_total_[part_users_[p]];
                if (casc[c].viral) ++key_viral_[part_users_[p]];
            }
        }
    }

    if (config_.rho_mode == RhoMode::computed) {
        rho_ = cascades_.message_count() == 0
                   ? std::numeric_limits<double>::quiet_NaN()
                   : static_cast<double>(cascades_.viral_count()) /
                         static_cast<double>(cascades_.message_count());
    } else {
        rho_ = config_.rho;
    }

    // Prima facie participants per cascade, in time order.
    pf_offsets_.assign(casc.size() + 1, 0);
    for (std::size_t c = 0; c < casc.size(); ++c) {
        std::uint64_t kept = 0;
        if (casc[c].viral) {
            for (std::uint64_t p = part_offsets_[c]; p < part_offsets_[c + 1]; ++p) {
                if (!part_key_[p]) continue;
                const UserId u = part_users_[p];
                if (key_total_[u] == 0) continue;
                const double rho_u = static_cast<double>(key_viral_[u]) /
                                     static_cast<double>(key_total_[u]);
                if (rho_u > rho_) {
                    pf_users_.push_back(u);
                    pf_times_.push_back(part_times_[p]);
                    ++kept;
                }
            }
        }
        pf_offsets_[c + 1] = pf_offsets_[c] + kept;
    }

    // R(i): ordered prima facie pairs with strict time precedence, over all
    // viral cascades. Pairs are packed, globally sorted and dedup'ed, so the
    // result is independent of the emission schedule.
    std::vector<std::uint64_t> pairs;
#ifdef _OPENMP
#pragma omp parallel
    {
        std::vector<std::uint64_t> local;
#pragma omp for schedule(dynamic, 32) nowait
        for (std::int64_t c = 0; c < static_cast<std::int64_t>(casc.size()); ++c) {
            const std::uint64_t lo = pf_offsets_[c], hi = pf_offsets_[c + 1];
            for (std::uint64_t x = lo; x < hi; ++x)
                for (std::uint64_t y = x + 1; y < hi; ++y)
                    if (pf_times_[x] < pf_times_[y])
                        local.push_back((static_cast<std::uint64_t>(pf_users_[x]) << 32) |
                                        pf_users_[y]);
        }
#pragma omp critical
        pairs.insert(pairs.end(), local.begin(), local.end());
    }
#else
    for (std::size_t c = 0; c < casc.size(); ++c) {
        const std::uint64_t lo = pf_offsets_[c], hi = pf_offsets_[c + 1];
        for (std::uint64_t x = lo; x < hi; ++x)
            for (std::uint64_t y = x + 1; y < hi; ++y)
                if (pf_times_[x] < pf_times_[y])
                    pairs.push_back((static_cast<std::uint64_t>(pf_users_[x]) << 32) |
                                    pf_users_[y]);
    }
#endif
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    r_offsets_.assign(n_users + 1, 0);
    r_adj_.resize(pairs.size());
    for (std::uint64_t pk : pairs) ++r_offsets_[(pk >> 32) + 1];
    for (std::size_t u = 0; u < n_users; ++u) r_offsets_[u + 1] += r_offsets_[u];
    for (std::size_t idx = 0; idx < pairs.size(); ++idx)
        r_adj_[idx] = static_cast<UserId>(pairs[idx] & 0xffffffffu);

    q_offsets_.assign(n_users + 1, 0);
    q_adj_.resize(pairs.size());
    for (std::uint64_t pk : pairs) ++q_offsets_[(pk & 0xffffffffu) + 1];
    for (std::size_t u = 0; u < n_users; ++u) q_offsets_[u + 1] += q_offsets_[u];
    {
        std::vector<std::uint64_t> cursor(q_offsets_.begin(), q_offsets_.end() - 1);
        for (std::uint64_t pk : pairs) {
            const auto j = static_cast<UserId>(pk & 0xffffffffu);
            q_adj_[cursor[j]++] = static_cast<UserId>(pk >> 32);
        }
    }

    // Per-user posting lists: earliest action per message, sorted by message.
    post_offsets_.assign(n_users + 1, 0);
    deg_.assign(n_users, 0);
    vir_deg_.assign(n_users, 0);
    post_msgs_.reserve(log_.size());
    post_times_.reserve(log_.size());
    for (std::size_t u = 0; u < n_users; ++u) {
        auto acts = log_.user_actions(static_cast<UserId>(u));
        std::vector<std::pair<MessageId, Timestamp>> posts;
        posts.reserve(acts.size());
        for (const Action& a : acts) posts.emplace_back(a.message, a.time);
        std::sort(posts.begin(), posts.end());
        std::uint32_t kept = 0;
        for (std::size_t k = 0; k < posts.size(); ++k) {
            if (k > 0 && posts[k].first == posts[k - 1].first) continue;
            post_msgs_.push_back(posts[k].first);
            post_times_.push_back(posts[k].second);
            ++kept;
            if (cascades_.is_viral(posts[k].first)) ++vir_deg_[u];
        }
        deg_[u] = kept;
        post_offsets_[u + 1] = post_offsets_[u] + kept;
    }
}

double CausalEngine::prior_rho() const {
    if (std::isnan(rho_)) throw DomainError("prior rho undefined on an empty message set");
    return rho_;
}

std::optional<double> CausalEngine::user_rho(UserId user) const {
    if (user >= log_.user_count()) throw DomainError("user_rho: unknown user");
    if (key_total_[user] == 0) return std::nullopt;
    return static_cast<double>(key_viral_[user]) / static_cast<double>(key_total_[user]);
}

bool CausalEngine::is_key(MessageId m, UserId u) const {
    const auto ci = cascades_.cascade_index(m);
    if (ci < 0) throw DomainError("is_key: message has no cascade");
    for (std::uint64_t p = part_offsets_[ci]; p < part_offsets_[ci + 1]; ++p)
        if (part_users_[p] == u) return part_key_[p] != 0;
    throw DomainError("is_key: user is not an m-participant");
}

std::vector<UserId> CausalEngine::prima_facie_users(MessageId m) const {
    const auto ci = cascades_.cascade_index(m);
    if (ci < 0) throw DomainError("prima_facie_users: unknown message");
    std::vector<UserId> out(
        pf_users_.begin() + static_cast<std::ptrdiff_t>(pf_offsets_[ci]),
        pf_users_.begin() + static_cast<std::ptrdiff_t>(pf_offsets_[ci + 1]));
    std::sort(out.begin(), out.end());
    return out;
}

std::span<const UserId> CausalEngine::related_users(UserId i) const {
    if (i >= log_.user_count()) return {};
    return {r_adj_.data() + r_offsets_[i], r_adj_.data() + r_offsets_[i + 1]};
}

std::span<const UserId> CausalEngine::related_to(UserId j) const {
    if (j >= log_.user_count()) return {};
    return {q_adj_.data() + q_offsets_[j], q_adj_.data() + q_offsets_[j + 1]};
}

PairStats CausalEngine::pair_stats(UserId i, UserId j) const {
    if (i == j) throw DomainError("pair_stats: i and j must differ");
    PairStats ps;
    std::uint64_t a = post_offsets_[i], a_end = post_offsets_[i + 1];
    std::uint64_t b = post_offsets_[j], b_end = post_offsets_[j + 1];
    while (a < a_end && b < b_end) {
        if (post_msgs_[a] < post_msgs_[b]) {
            ++a;
        } else if (post_msgs_[b] < post_msgs_[a]) {
            ++b;
        } else {
            if (post_times_[a] < post_times_[b]) {
                ++ps.support_ij;
                if (cascades_.is_viral(post_msgs_[a])) ++ps.viral_ij;
            }
            ++a;
            ++b;
        }
    }
    ps.support_neg = deg_[j] - ps.support_ij;
    ps.viral_neg = vir_deg_[j] - ps.viral_ij;
    return ps;
}

CausalEngine::KmRel CausalEngine::km_rel_for(UserId i) const {
    KmRel out;
    double km_sum = 0.0, rel_sum = 0.0;
    std::uint32_t km_cnt = 0, rel_cnt = 0;
    for (UserId j : related_users(i)) {
        const PairStats ps = pair_stats(i, j);
        const auto p = ps.p_ij();
        const auto pn = ps.p_neg_ij();
        if (p && pn) {
            km_sum += *p - *pn;
            ++km_cnt;
            if (auto s = relative_likelihood_term(*p, *pn, config_.alpha)) {
                rel_sum += *s;
                ++rel_cnt;
            } else {
                ++out.rel.skipped;
            }
        } else {
            ++out.km.skipped;
            ++out.rel.skipped;
        }
    }
    if (km_cnt > 0) out.km.value = km_sum / static_cast<double>(km_cnt);
    if (rel_cnt > 0) out.rel.value = rel_sum / static_cast<double>(rel_cnt);
    return out;
}

MetricValue CausalEngine::epsilon_km(UserId i) const { return km_rel_for(i).km; }

MetricValue CausalEngine::epsilon_rel(UserId i) const { return km_rel_for(i).rel; }

MetricValue CausalEngine::epsilon_nb(UserId j) const {
    MetricValue out;
    double sum = 0.0;
    std::uint32_t cnt = 0;
    for (UserId i : related_to(j)) {
        const MetricValue km = km_rel_for(i).km;
        if (km.value) {
            sum += *km.value;
            ++cnt;
        } else {
            ++out.skipped;
        }
    }
    if (cnt > 0) out.value = sum / static_cast<double>(cnt);
    return out;
}

MetricValue CausalEngine::epsilon_wnb(UserId j, std::span<const double> weights) const {
    MetricValue out;
    std::vector<std::pair<double, double>> terms;  // (weight, km)
    for (UserId i : related_to(j)) {
        const double w = weights.empty()
                             ? static_cast<double>(r_offsets_[i + 1] - r_offsets_[i])
                             : weights[i];
        const MetricValue km = km_rel_for(i).km;
        if (!km.value || w == 0.0) {
            ++out.skipped;
            continue;
        }
        terms.emplace_back(w, *km.value);
    }
    if (terms.empty()) return out;

    bool all_equal = true;
    for (const auto& [w, v] : terms)
        if (w != terms.front().first) all_equal = false;
    if (all_equal) {
        // Equal weights cancel; evaluate as the plain mean so wnb == nb
        // bit-for-bit in that case.
        double sum = 0.0;
        for (const auto& [w, v] : terms) sum += v;
        out.value = sum / static_cast<double>(terms.size());
        return out;
    }
    double num = 0.0, den = 0.0;
    for (const auto& [w, v] : terms) {
        num += w * v;
        den += w;
    }
    if (den == 0.0) return out;
    out.value = num / den;
    return out;
}

MetricValue CausalEngine::epsilon(Metric k, UserId u) const {
    switch (k) {
        case Metric::km: return epsilon_km(u);
        case Metric::rel: return epsilon_rel(u);
        case Metric::nb: return epsilon_nb(u);
        case Metric::wnb: return epsilon_wnb(u);
    }
    return {};
}

std::vector<CausalityVector> CausalEngine::all_vectors() const {
    return all_vectors(log_.time_span());
}

std::vector<CausalityVector> CausalEngine::all_vectors(Interval tag) const {
    const auto n_users = static_cast<std::int64_t>(log_.user_count());
    std::vector<CausalityVector> out(static_cast<std::size_t>(n_users));
    std::vector<MetricValue> km(out.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64)
#endif
    for (std::int64_t u = 0; u < n_users; ++u) {
        const KmRel kr = km_rel_for(static_cast<UserId>(u));
        km[u] = kr.km;
        out[u].user = static_cast<UserId>(u);
        out[u].interval = tag;
        out[u].km = kr.km.value;
        out[u].rel = kr.rel.value;
    }

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64)
#endif
    for (std::int64_t j = 0; j < n_users; ++j) {
        double nb_sum = 0.0, wnb_num = 0.0, wnb_den = 0.0;
        std::uint32_t cnt = 0;
        bool all_equal = true;
        double first_w = 0.0;
        for (UserId i : related_to(static_cast<UserId>(j))) {
            if (!km[i].value) continue;
            const auto w = static_cast<double>(r_offsets_[i + 1] - r_offsets_[i]);
            if (cnt == 0)
                first_w = w;
            else if (w != first_w)
                all_equal = false;
            nb_sum += *km[i].value;
            wnb_num += w * *km[i].value;
            wnb_den += w;
            ++cnt;
        }
        if (cnt > 0) {
            out[j].nb = nb_sum / static_cast<double>(cnt);
            if (all_equal)
                out[j].wnb = out[j].nb;
            else if (wnb_den != 0.0)
                out[j].wnb = wnb_num / wnb_den;
        }
    }
    return out;
}

CausalityVector causality_vector(UserId u, Interval interval, const ActionLog& log,
                                 std::uint64_t theta, double phi,
                                 const CausalConfig& config) {
    ActionLog sub = log.restrict(interval);
    CascadeSet cs = extract_cascades(sub, theta, phi);
    CausalEngine engine(std::move(sub), std::move(cs), config);
    CausalityVector v;
    v.user = u;
    v.interval = interval;
    v.km = engine.epsilon_km(u).value;
    v.rel = engine.epsilon_rel(u).value;
    v.nb = engine.epsilon_nb(u).value;
    v.wnb = engine.epsilon_wnb(u).value;
    return v;
}

std::vector<CausalityVector> all_causality_vectors(Interval interval, const ActionLog& log,
                                                   std::uint64_t theta, double phi,
                                                   const CausalConfig& config) {
    ActionLog sub = log.restrict(interval);
    CascadeSet cs = extract_cascades(sub, theta, phi);
    CausalEngine engine(std::move(sub), std::move(cs), config);
    return engine.all_vectors(interval);
}

}  // namespace psm
