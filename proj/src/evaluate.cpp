#include "psm/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace psm {

namespace {

void fill_rates(EvaluationReport& r) {
    const double tp = static_cast<double>(r.tp);
    r.precision = r.tp + r.fp > 0 ? tp / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = r.tp + r.fn > 0 ? tp / static_cast<double>(r.tp + r.fn) : 0.0;
    r.f1 = r.precision + r.recall > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
}

// Mann-Whitney rank-sum AUC with tied scores receiving average ranks.
double rank_sum_auc(std::span<const Prediction> preds,
                    const std::unordered_map<UserId, Label>& truth) {
    std::vector<std::pair<double, bool>> scored;  // (score, is_psm)
    scored.reserve(preds.size());
    std::size_t n_pos = 0;
    for (const Prediction& p : preds) {
        const bool pos = truth.at(p.user) == Label::psm;
        scored.emplace_back(p.score, pos);
        if (pos) ++n_pos;
    }
    const std::size_t n_neg = scored.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) return 0.5;

    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < scored.size();) {
        std::size_t j = i;
        while (j < scored.size() && scored[j].first == scored[i].first) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
        for (std::size_t idx = i; idx < j; ++idx)
            if (scored[idx].second) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos -
                     static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

EvaluationReport score(std::span<const Prediction> predictions,
                       const std::unordered_map<UserId, Label>& truth) {
    if (predictions.empty()) throw DomainError("score: empty prediction set");
    EvaluationReport r;
    std::uint64_t pos = 0;
    for (const Prediction& p : predictions) {
        const auto it = truth.find(p.user);
        if (it == truth.end())
            throw DomainError("score: no truth label for a predicted user");
        const bool actual_psm = it->second == Label::psm;
        const bool predicted_psm = p.predicted == Label::psm;
        if (actual_psm) ++pos;
        if (predicted_psm && actual_psm) ++r.tp;
        else if (predicted_psm) ++r.fp;
        else if (actual_psm) ++r.fn;
        else ++r.tn;
    }
    fill_rates(r);
    r.auc = rank_sum_auc(predictions, truth);
    r.truth_psm_fraction = static_cast<double>(pos) / static_cast<double>(predictions.size());
    return r;
}

std::vector<ActionLog> prefix_subsets(const ActionLog& log,
                                      std::span<const double> fractions) {
    const Interval span = log.time_span();
    std::vector<ActionLog> out;
    out.reserve(fractions.size());
    for (double pct : fractions) {
        if (!(pct > 0.0 && pct <= 100.0))
            throw DomainError("prefix_subsets: fraction must be in (0, 100]");
        const auto cut = static_cast<Timestamp>(
            static_cast<double>(span.hi - span.lo) * (pct / 100.0));
        out.push_back(log.restrict({span.lo, span.lo + cut}));
    }
    return out;
}

EvaluationReport cross_validate(const std::vector<LabeledUser>& data,
                                const Classifier& classifier, std::size_t folds,
                                std::uint64_t seed) {
    if (folds < 2) throw DomainError("cross_validate: need at least 2 folds");
    if (data.size() < folds) throw DomainError("cross_validate: fewer samples than folds");

    // Stratified fold assignment: shuffle each class, deal round-robin.
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < data.size(); ++i)
        by_class[data[i].label == Label::psm ? 1 : 0].push_back(i);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> fold_of(data.size(), 0);
    for (auto& cls : by_class) {
        for (std::size_t i = cls.size(); i > 1; --i)
            std::swap(cls[i - 1], cls[rng() % i]);
        for (std::size_t i = 0; i < cls.size(); ++i) fold_of[cls[i]] = i % folds;
    }

    EvaluationReport agg;
    std::unordered_map<UserId, Label> truth;
    for (const LabeledUser& u : data) truth[u.user] = u.label;
    std::vector<Prediction> pooled;

    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<LabeledUser> train;
        std::vector<QueryUser> test;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (fold_of[i] == f)
                test.push_back({data[i].user, data[i].x, data[i].mask});
            else
                train.push_back(data[i]);
        }
        if (test.empty()) continue;
        bool has[2] = {false, false};
        for (const LabeledUser& u : train) has[u.label == Label::psm ? 1 : 0] = true;
        if (!has[0] || !has[1])
            agg.warnings.push_back("fold " + std::to_string(f) +
                                   ": a class is absent from the training split");

        const auto preds = classifier(train, test);
        EvaluationReport fold = score(preds, truth);
        agg.tp += fold.tp;
        agg.fp += fold.fp;
        agg.tn += fold.tn;
        agg.fn += fold.fn;
        agg.fold_f1.push_back(fold.f1);
        pooled.insert(pooled.end(), preds.begin(), preds.end());
    }

    fill_rates(agg);
    agg.auc = rank_sum_auc(pooled, truth);
    std::uint64_t pos = 0;
    for (const LabeledUser& u : data)
        if (u.label == Label::psm) ++pos;
    agg.truth_psm_fraction = static_cast<double>(pos) / static_cast<double>(data.size());

    if (agg.fold_f1.size() > 1) {
        const double mean = std::accumulate(agg.fold_f1.begin(), agg.fold_f1.end(), 0.0) /
                            static_cast<double>(agg.fold_f1.size());
        double var = 0.0;
        for (double v : agg.fold_f1) var += (v - mean) * (v - mean);
        agg.fold_f1_variance = var / static_cast<double>(agg.fold_f1.size() - 1);
    }
    return agg;
}

TimelinessReport timeliness(const ActionLog& log, const std::vector<Label>& truth,
                            const Vectorizer& vectorizer, const ClassifierFactory& factory,
                            const TimelinessConfig& config) {
    if (truth.size() != log.user_count())
        throw DomainError("timeliness: truth must cover every user");
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
        throw ConfigError("timeliness: train_fraction must be in (0,1)");
    const Interval span = log.time_span();
    if (span.empty() || span.hi - span.lo < 2 * config.period_length)
        throw DomainError("timeliness: log must span at least two periods");

    std::size_t n_periods =
        config.max_periods > 0
            ? config.max_periods
            : static_cast<std::size_t>((span.hi - span.lo) / 2 / config.period_length);
    n_periods = std::max<std::size_t>(n_periods, 2);

    TimelinessReport rep;
    for (std::size_t p = 0; p < n_periods; ++p)
        rep.periods.push_back({span.lo + static_cast<Timestamp>(p) * config.period_length,
                               span.lo + static_cast<Timestamp>(p + 1) * config.period_length});

    auto active_in = [&](const Interval& half_open) {
        std::vector<UserId> out;
        const ActionLog sub = log.restrict({half_open.lo, half_open.hi - 1});
        for (UserId u = 0; u < sub.user_count(); ++u)
            if (!sub.user_actions(u).empty()) out.push_back(u);
        return out;
    };

    // Period 1: seeded stratified train/holdout split of its active users.
    const auto first_users = active_in(rep.periods[0]);
    std::vector<UserId> by_class[2];
    for (UserId u : first_users) by_class[truth[u] == Label::psm ? 1 : 0].push_back(u);
    std::mt19937_64 rng(config.seed);
    std::vector<UserId> train_users, holdout;
    for (auto& cls : by_class) {
        for (std::size_t i = cls.size(); i > 1; --i)
            std::swap(cls[i - 1], cls[rng() % i]);
        const auto n_train =
            static_cast<std::size_t>(std::floor(config.train_fraction *
                                                static_cast<double>(cls.size())));
        for (std::size_t i = 0; i < cls.size(); ++i)
            (i < n_train ? train_users : holdout).push_back(cls[i]);
    }
    std::sort(train_users.begin(), train_users.end());
    std::sort(holdout.begin(), holdout.end());

    std::vector<std::uint8_t> in_train(log.user_count(), 0), in_holdout(log.user_count(), 0);
    for (UserId u : train_users) in_train[u] = 1;
    for (UserId u : holdout) in_holdout[u] = 1;

    std::vector<UserId> pending;        // held-out PSMs not caught yet
    std::vector<UserId> clean_normals;  // held-out normals not flagged yet
    for (UserId u : holdout)
        (truth[u] == Label::psm ? pending : clean_normals).push_back(u);
    rep.holdout_psm = pending.size();
    rep.holdout_normal = clean_normals.size();

    for (std::size_t p = 0; p < n_periods; ++p) {
        if (p > 0) {
            // Training grows by the users first active in this period.
            for (UserId u : active_in(rep.periods[p])) {
                if (in_train[u] || in_holdout[u]) continue;
                in_train[u] = 1;
                train_users.push_back(u);
            }
            std::sort(train_users.begin(), train_users.end());
        }
        const ActionLog prefix = log.restrict({span.lo, rep.periods[p].hi - 1});
        const auto vectors = vectorizer(prefix);
        const Classifier classifier = factory(prefix);

        std::vector<LabeledUser> train;
        train.reserve(train_users.size());
        for (UserId u : train_users) train.push_back(make_labeled(vectors[u], truth[u]));

        std::vector<QueryUser> queries;
        queries.reserve(pending.size() + clean_normals.size());
        for (UserId u : pending) queries.push_back(make_query(vectors[u]));
        for (UserId u : clean_normals) queries.push_back(make_query(vectors[u]));

        std::uint64_t tp = 0, fp = 0;
        if (!train.empty() && !queries.empty()) {
            const auto preds = classifier(train, queries);
            std::vector<std::uint8_t> flagged(log.user_count(), 0);
            for (const Prediction& pr : preds)
                if (pr.predicted == Label::psm) flagged[pr.user] = 1;
            std::vector<UserId> still_pending, still_clean;
            for (UserId u : pending) {
                if (flagged[u]) ++tp;
                else still_pending.push_back(u);
            }
            for (UserId u : clean_normals) {
                if (flagged[u]) ++fp;
                else still_clean.push_back(u);
            }
            pending = std::move(still_pending);
            clean_normals = std::move(still_clean);
        }
        rep.tp_per_period.push_back(tp);
        rep.fp_per_period.push_back(fp);
    }
    rep.remaining = pending.size();
    return rep;
}

}  // namespace psm
