#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "psm/action_log.hpp"
#include "psm/common.hpp"

namespace psm {

enum class RhoMode { computed, fixed };

struct CausalConfig {
    RhoMode rho_mode = RhoMode::fixed;
    double rho = 0.1;      // prior used in fixed mode
    double alpha = 0.001;  // relative-likelihood smoothing, must be > 0

    void validate() const {
        if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
        if (rho_mode == RhoMode::fixed && !(rho >= 0.0 && rho <= 1.0))
            throw ConfigError("fixed rho must be in [0,1]");
    }
};

// Chronological co-posting statistics for an ordered user pair (i, j).
// A probability is defined iff its support is nonzero.
struct PairStats {
    std::uint64_t support_ij = 0;   // messages where both posted and i strictly precedes j
    std::uint64_t viral_ij = 0;     // viral subset of the above
    std::uint64_t support_neg = 0;  // messages where j posted and i did not precede j
    std::uint64_t viral_neg = 0;    // viral subset of the above

    std::optional<double> p_ij() const {
        if (support_ij == 0) return std::nullopt;
        return static_cast<double>(viral_ij) / static_cast<double>(support_ij);
    }
    std::optional<double> p_neg_ij() const {
        if (support_neg == 0) return std::nullopt;
        return static_cast<double>(viral_neg) / static_cast<double>(support_neg);
    }
};

// A metric value together with the number of per-term skips (terms whose
// inputs were undefined). Undefined results are first-class, never 0.
struct MetricValue {
    std::optional<double> value;
    std::uint32_t skipped = 0;
};

// The four causality metrics of one user over one interval.
struct CausalityVector {
    UserId user = 0;
    Interval interval{0, -1};
    std::optional<double> km;
    std::optional<double> rel;
    std::optional<double> nb;
    std::optional<double> wnb;

    std::optional<double> get(Metric m) const {
        switch (m) {
            case Metric::km: return km;
            case Metric::rel: return rel;
            case Metric::nb: return nb;
            case Metric::wnb: return wnb;
        }
        return std::nullopt;
    }

    void set(Metric m, std::optional<double> v) {
        switch (m) {
            case Metric::km: km = v; break;
            case Metric::rel: rel = v; break;
            case Metric::nb: nb = v; break;
            case Metric::wnb: wnb = v; break;
        }
    }

    // Bit i set iff metric i is defined (km=1, rel=2, nb=4, wnb=8).
    std::uint8_t defined_mask() const {
        return static_cast<std::uint8_t>((km ? 1 : 0) | (rel ? 2 : 0) | (nb ? 4 : 0) |
                                         (wnb ? 8 : 0));
    }

    // Feature vector with undefined components imputed as 0. Imputation is
    // meant for classifier feature assembly only; keep the mask alongside.
    std::array<double, 4> imputed() const {
        return {km.value_or(0.0), rel.value_or(0.0), nb.value_or(0.0), wnb.value_or(0.0)};
    }
};

// One branch-term of the relative-likelihood metric:
//   p > pneg:  p / (pneg + alpha) - 1
//   p <= pneg: 1 - pneg / p        (undefined when p == 0)
std::optional<double> relative_likelihood_term(double p, double pneg, double alpha);

// Computes prior/user/pair probabilities, prima facie causal users, related
// user sets and the four causality metrics over one (log, cascade set) pair.
//
// All state is prepared in the constructor; queries afterwards are pure and
// safe to run concurrently. Batch computation is OpenMP-parallel and
// produces results independent of the thread count. Duplicate (user,
// message) actions, if ingestion kept them, are reduced to the earliest.
class CausalEngine {
public:
    CausalEngine(ActionLog log, CascadeSet cascades, CausalConfig config);

    const ActionLog& log() const { return log_; }
    const CascadeSet& cascades() const { return cascades_; }
    const CausalConfig& config() const { return config_; }

    // Prior probability of a message going viral: |M_vir|/|M| in computed
    // mode (error on an empty message set), the configured constant in
    // fixed mode.
    double prior_rho() const;

    // Fraction of messages where `user` is a key user that went viral;
    // undefined when the user is a key user of no message.
    std::optional<double> user_rho(UserId user) const;

    bool is_key(MessageId m, UserId u) const;

    // Key users of m that satisfy the prima facie test (m viral, rho_u >
    // prior rho), sorted by user id. Unknown messages are a domain error.
    std::vector<UserId> prima_facie_users(MessageId m) const;

    // R(i): users j that follow i in some cascade where both are prima
    // facie. Sorted ascending, no duplicates.
    std::span<const UserId> related_users(UserId i) const;

    // Q(j) = {i : j in R(i)}.
    std::span<const UserId> related_to(UserId j) const;

    PairStats pair_stats(UserId i, UserId j) const;

    MetricValue epsilon_km(UserId i) const;
    MetricValue epsilon_rel(UserId i) const;
    MetricValue epsilon_nb(UserId j) const;
    // Weighted neighborhood metric; weights indexed by user id, defaulting
    // to |R(i)|. When every contributing weight is equal this returns the
    // plain neighborhood mean bit-for-bit.
    MetricValue epsilon_wnb(UserId j, std::span<const double> weights = {}) const;

    MetricValue epsilon(Metric k, UserId u) const;

    // Causality vectors for every user id, kept aligned with the vocabulary.
    // `tag` labels the vectors' interval field; defaults to the log span.
    std::vector<CausalityVector> all_vectors() const;
    std::vector<CausalityVector> all_vectors(Interval tag) const;

private:
    struct KmRel {
        MetricValue km;
        MetricValue rel;
    };
    KmRel km_rel_for(UserId i) const;

    ActionLog log_;
    CascadeSet cascades_;
    CausalConfig config_;

    // Per-user posting lists sorted by message id; earliest time per message.
    std::vector<std::uint32_t> post_offsets_;
    std::vector<MessageId> post_msgs_;
    std::vector<Timestamp> post_times_;
    std::vector<std::uint32_t> deg_;      // distinct messages posted
    std::vector<std::uint32_t> vir_deg_;  // distinct viral messages posted

    std::vector<std::uint32_t> key_total_;  // messages where user is key
    std::vector<std::uint32_t> key_viral_;  // viral subset

    // Prima facie participants per cascade, in time order (CSR).
    std::vector<std::uint64_t> pf_offsets_;
    std::vector<UserId> pf_users_;
    std::vector<Timestamp> pf_times_;

    // Per-cascade key flags aligned with dedup'ed participants.
    std::vector<std::uint64_t> part_offsets_;
    std::vector<UserId> part_users_;
    std::vector<Timestamp> part_times_;
    std::vector<std::uint8_t> part_key_;

    // R and its transpose Q as CSR adjacency (sorted per row).
    std::vector<std::uint64_t> r_offsets_;
    std::vector<UserId> r_adj_;
    std::vector<std::uint64_t> q_offsets_;
    std::vector<UserId> q_adj_;

    double rho_ = 0.0;
};

// Restricts the log to the interval, recomputes the cascade set with the
// same theta/phi, and evaluates all four metrics for one user.
CausalityVector causality_vector(UserId u, Interval interval, const ActionLog& log,
                                 std::uint64_t theta, double phi, const CausalConfig& config);

// Batch variant over every user.
std::vector<CausalityVector> all_causality_vectors(Interval interval, const ActionLog& log,
                                                   std::uint64_t theta, double phi,
                                                   const CausalConfig& config);

}  // namespace psm
