#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "psm/evaluate.hpp"
#include "psm/synth.hpp"

using namespace psm;
using namespace psm::test;

namespace {

Prediction pred(UserId u, Label l, double score) {
    Prediction p;
    p.user = u;
    p.predicted = l;
    p.score = score;
    return p;
}

}  // namespace

TEST_SUITE("evaluate") {

TEST_CASE("confusion counts and derived rates") {
    // TP=3, FP=1, FN=1, TN=1.
    std::unordered_map<UserId, Label> truth{{0, Label::psm}, {1, Label::psm},
                                            {2, Label::psm}, {3, Label::psm},
                                            {4, Label::normal}, {5, Label::normal}};
    std::vector<Prediction> preds{pred(0, Label::psm, 0.9),    pred(1, Label::psm, 0.8),
                                  pred(2, Label::psm, 0.7),    pred(3, Label::normal, 0.2),
                                  pred(4, Label::psm, 0.6),    pred(5, Label::normal, 0.1)};
    const EvaluationReport r = score(preds, truth);
    CHECK(r.tp == 3);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
    CHECK(r.tn == 1);
    CHECK(r.precision == doctest::Approx(0.75));
    CHECK(r.recall == doctest::Approx(0.75));
    CHECK(r.f1 == doctest::Approx(0.75));
    CHECK(r.tp + r.fp + r.tn + r.fn == preds.size());
}

TEST_CASE("perfect predictions score 1.0 everywhere") {
    std::unordered_map<UserId, Label> truth{{0, Label::psm}, {1, Label::normal},
                                            {2, Label::psm}, {3, Label::normal}};
    std::vector<Prediction> preds{pred(0, Label::psm, 1.0), pred(1, Label::normal, 0.0),
                                  pred(2, Label::psm, 1.0), pred(3, Label::normal, 0.0)};
    const EvaluationReport r = score(preds, truth);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
    CHECK(r.auc == 1.0);
}

TEST_CASE("constant scores give auc one half") {
    std::unordered_map<UserId, Label> truth{{0, Label::psm}, {1, Label::normal},
                                            {2, Label::psm}, {3, Label::normal}};
    std::vector<Prediction> preds{pred(0, Label::psm, 0.5), pred(1, Label::psm, 0.5),
                                  pred(2, Label::psm, 0.5), pred(3, Label::psm, 0.5)};
    CHECK(score(preds, truth).auc == 0.5);
}

TEST_CASE("score validates its inputs") {
    std::unordered_map<UserId, Label> truth{{0, Label::psm}};
    CHECK_THROWS_AS(score({}, truth), DomainError);
    std::vector<Prediction> preds{pred(7, Label::psm, 1.0)};
    CHECK_THROWS_AS(score(preds, truth), DomainError);
}

TEST_CASE("property: auc is invariant under strictly monotone score maps") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::unordered_map<UserId, Label> truth;
        std::vector<Prediction> a, b;
        for (UserId u = 0; u < 30; ++u) {
            truth[u] = rng() % 4 == 0 ? Label::psm : Label::normal;
            const double s = static_cast<double>(rng() % 20) / 19.0;
            a.push_back(pred(u, Label::normal, s));
            b.push_back(pred(u, Label::normal, std::tanh(3.0 * s) * 0.49 + 0.5));
        }
        bool both = false, seen[2] = {false, false};
        for (auto& [u, l] : truth) seen[l == Label::psm] = true;
        both = seen[0] && seen[1];
        if (!both) continue;
        CHECK(score(a, truth).auc == doctest::Approx(score(b, truth).auc).epsilon(1e-12));
    }
}

TEST_CASE("prefix subsets nest and never look past the cut") {
    const ActionLog log = t1_log_days();
    const double fracs[] = {10, 20, 30, 40, 50, 100};
    const auto subs = prefix_subsets(log, fracs);
    REQUIRE(subs.size() == 6);
    CHECK(subs[5].size() == log.size());
    for (std::size_t i = 1; i < subs.size(); ++i)
        CHECK(subs[i - 1].size() <= subs[i].size());
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (subs[i].empty()) continue;
        const double pct = fracs[i] / 100.0;
        const Interval full = log.time_span();
        const auto cut = full.lo + static_cast<Timestamp>(
                                       static_cast<double>(full.hi - full.lo) * pct);
        CHECK(subs[i].time_span().hi <= cut);
    }
    CHECK_THROWS_AS(prefix_subsets(log, std::vector<double>{0.0}), DomainError);
    CHECK_THROWS_AS(prefix_subsets(log, std::vector<double>{101.0}), DomainError);
}

TEST_CASE("leave-one-out cv on a separable pair is perfect") {
    std::vector<LabeledUser> data{
        {0, Label::psm, {1.0, 0, 0, 0}, 0b1111},
        {1, Label::normal, {-1.0, 0, 0, 0}, 0b1111},
        {2, Label::psm, {1.1, 0, 0, 0}, 0b1111},
        {3, Label::normal, {-1.1, 0, 0, 0}, 0b1111},
    };
    const Classifier knn1 = [](const std::vector<LabeledUser>& train,
                               const std::vector<QueryUser>& queries) {
        return knn_classify_all(queries, train, 1);
    };
    const EvaluationReport r = cross_validate(data, knn1, data.size(), 99);
    CHECK(r.f1 == 1.0);
    CHECK(r.tp == 2);
    CHECK(r.tn == 2);
}

TEST_CASE("cv is deterministic for a fixed seed") {
    std::mt19937_64 rng(11);
    std::vector<LabeledUser> data;
    for (UserId u = 0; u < 40; ++u)
        data.push_back({u, rng() % 3 == 0 ? Label::psm : Label::normal,
                        {static_cast<double>(rng() % 100) / 50.0,
                         static_cast<double>(rng() % 100) / 50.0, 0, 0},
                        0b1111});
    const Classifier knn3 = [](const std::vector<LabeledUser>& train,
                               const std::vector<QueryUser>& queries) {
        return knn_classify_all(queries, train, 3);
    };
    const EvaluationReport a = cross_validate(data, knn3, 10, 4);
    const EvaluationReport b = cross_validate(data, knn3, 10, 4);
    CHECK(a.tp == b.tp);
    CHECK(a.fp == b.fp);
    CHECK(a.f1 == b.f1);
    CHECK(a.auc == b.auc);
    CHECK(a.fold_f1 == b.fold_f1);
    // A different seed reshuffles folds.
    CHECK(cross_validate(data, knn3, 10, 5).fold_f1 != a.fold_f1);
}

TEST_CASE("cv warns when a fold's training split loses a class") {
    std::vector<LabeledUser> data;
    for (UserId u = 0; u < 6; ++u)
        data.push_back({u, u == 0 ? Label::psm : Label::normal,
                        {static_cast<double>(u), 0, 0, 0}, 0b1111});
    const Classifier knn1 = [](const std::vector<LabeledUser>& train,
                               const std::vector<QueryUser>& queries) {
        return knn_classify_all(queries, train, 1);
    };
    const EvaluationReport r = cross_validate(data, knn1, 3, 1);
    CHECK(!r.warnings.empty());
}

TEST_CASE("metric identities recompute from the confusion counts") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::unordered_map<UserId, Label> truth;
        std::vector<Prediction> preds;
        for (UserId u = 0; u < 25; ++u) {
            truth[u] = rng() % 3 == 0 ? Label::psm : Label::normal;
            preds.push_back(pred(u, rng() % 2 == 0 ? Label::psm : Label::normal,
                                 static_cast<double>(rng() % 100) / 99.0));
        }
        const EvaluationReport r = score(preds, truth);
        const double p = r.tp + r.fp > 0
                             ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp)
                             : 0.0;
        const double rec = r.tp + r.fn > 0
                               ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn)
                               : 0.0;
        CHECK(r.precision == p);
        CHECK(r.recall == rec);
        const double f1 = p + rec > 0 ? 2 * p * rec / (p + rec) : 0.0;
        CHECK(r.f1 == doctest::Approx(f1).epsilon(1e-15));
        CHECK(r.auc >= 0.0);
        CHECK(r.auc <= 1.0);
    }
}

TEST_CASE("timeliness with degenerate classifiers") {
    SynthConfig cfg;
    cfg.n_users = 120;
    cfg.n_messages = 600;
    cfg.max_cascade_size = 40;
    cfg.time_span_days = 40.0;
    cfg.seed = 3;
    const SynthResult synth = generate(cfg);

    const Vectorizer zero_vectors = [&](const ActionLog& prefix) {
        std::vector<CausalityVector> out(prefix.user_count());
        for (UserId u = 0; u < out.size(); ++u) out[u].user = u;
        return out;
    };
    TimelinessConfig tcfg;
    tcfg.period_length = days(10);
    tcfg.seed = 17;

    const Classifier always_psm = [](const std::vector<LabeledUser>&,
                                     const std::vector<QueryUser>& queries) {
        std::vector<Prediction> out;
        for (const QueryUser& q : queries) {
            Prediction p;
            p.user = q.user;
            p.predicted = Label::psm;
            p.score = 1.0;
            out.push_back(p);
        }
        return out;
    };
    const TimelinessReport catch_all =
        timeliness(synth.log, synth.truth.labels, zero_vectors, always_psm, tcfg);
    CHECK(catch_all.tp_per_period[0] == catch_all.holdout_psm);
    CHECK(catch_all.fp_per_period[0] == catch_all.holdout_normal);  // degenerate guard
    CHECK(catch_all.remaining == 0);

    const Classifier never_psm = [](const std::vector<LabeledUser>&,
                                    const std::vector<QueryUser>& queries) {
        std::vector<Prediction> out;
        for (const QueryUser& q : queries) {
            Prediction p;
            p.user = q.user;
            p.predicted = Label::normal;
            out.push_back(p);
        }
        return out;
    };
    const TimelinessReport catch_none =
        timeliness(synth.log, synth.truth.labels, zero_vectors, never_psm, tcfg);
    CHECK(catch_none.remaining == catch_none.holdout_psm);
    for (std::uint64_t tp : catch_none.tp_per_period) CHECK(tp == 0);

    // Conservation: caught plus remaining equals the held-out psm total.
    std::uint64_t caught = 0;
    for (std::uint64_t tp : catch_all.tp_per_period) caught += tp;
    CHECK(caught + catch_all.remaining == catch_all.holdout_psm);
}

TEST_CASE("timeliness needs two periods") {
    SynthConfig cfg;
    cfg.n_users = 30;
    cfg.n_messages = 60;
    cfg.max_cascade_size = 10;
    cfg.time_span_days = 5.0;
    cfg.seed = 4;
    const SynthResult synth = generate(cfg);
    TimelinessConfig tcfg;
    tcfg.period_length = days(10);
    const Vectorizer zero_vectors = [&](const ActionLog& prefix) {
        std::vector<CausalityVector> out(prefix.user_count());
        for (UserId u = 0; u < out.size(); ++u) out[u].user = u;
        return out;
    };
    const Classifier noop = [](const std::vector<LabeledUser>&,
                               const std::vector<QueryUser>&) {
        return std::vector<Prediction>{};
    };
    CHECK_THROWS_AS(timeliness(synth.log, synth.truth.labels, zero_vectors, noop, tcfg),
                    DomainError);
}

}  // TEST_SUITE
