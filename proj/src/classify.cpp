#include "psm/classify.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace psm {

LabeledUser make_labeled(const CausalityVector& v, Label label) {
    return {v.user, label, v.imputed(), v.defined_mask()};
}

QueryUser make_query(const CausalityVector& v) {
    return {v.user, v.imputed(), v.defined_mask()};
}

std::string provenance_string(const Prediction& p) {
    switch (p.provenance) {
        case Provenance::threshold:
            return std::string("threshold(") + metric_name(p.threshold_metric) + ")";
        case Provenance::knn: return "knn";
        case Provenance::c2dc: return "c2dc(" + std::to_string(p.community) + ")";
        case Provenance::c2dc_fallback: return "c2dc_fallback";
    }
    return "?";
}

std::vector<Prediction> threshold_classify(std::span<const CausalityVector> vectors,
                                           const ThresholdRule& rule, Metric metric) {
    const double threshold = rule.get(metric);
    std::vector<Prediction> out;
    out.reserve(vectors.size());
    for (const CausalityVector& v : vectors) {
        Prediction p;
        p.user = v.user;
        p.provenance = Provenance::threshold;
        p.threshold_metric = metric;
        const auto value = v.get(metric);
        if (!value) {
            p.predicted = Label::normal;
            p.score = 0.0;
        } else {
            p.predicted = *value >= threshold ? Label::psm : Label::normal;
            p.score = threshold > 0.0 ? std::clamp(*value / threshold, 0.0, 1.0)
                                      : (*value >= threshold ? 1.0 : 0.0);
        }
        out.push_back(p);
    }
    return out;
}

namespace {

double sq_dist(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    double s = 0.0;
    for (int d = 0; d < 4; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

Prediction knn_vote(const QueryUser& query, std::span<const LabeledUser> training,
                    std::size_t k) {
    std::vector<std::pair<double, std::size_t>> order;  // (distance², index)
    order.reserve(training.size());
    for (std::size_t i = 0; i < training.size(); ++i)
        order.emplace_back(sq_dist(query.x, training[i].x), i);
    const std::size_t kk = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk),
                      order.end(), [&](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first < b.first;
                          return training[a.second].user < training[b.second].user;
                      });
    std::size_t psm = 0;
    for (std::size_t i = 0; i < kk; ++i)
        if (training[order[i].second].label == Label::psm) ++psm;

    Prediction p;
    p.user = query.user;
    p.provenance = Provenance::knn;
    // Label-count tie goes to PSM.
    p.predicted = 2 * psm >= kk ? Label::psm : Label::normal;
    p.score = static_cast<double>(psm) / static_cast<double>(kk);
    return p;
}

}  // namespace

Prediction knn_classify(const QueryUser& query, std::span<const LabeledUser> training,
                        std::size_t k) {
    if (training.empty()) throw DomainError("knn: empty training set");
    if (k < 1) throw DomainError("knn: k must be >= 1");
    return knn_vote(query, training, k);
}

std::vector<Prediction> knn_classify_all(std::span<const QueryUser> queries,
                                         std::span<const LabeledUser> training,
                                         std::size_t k) {
    if (training.empty()) throw DomainError("knn: empty training set");
    if (k < 1) throw DomainError("knn: k must be >= 1");
    std::vector<Prediction> out(queries.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(queries.size()); ++i)
        out[i] = knn_vote(queries[i], training, k);
    return out;
}

C2dcResult c2dc_classify(std::span<const QueryUser> queries,
                         std::span<const LabeledUser> training, const CoPostGraph& graph,
                         std::size_t k, std::uint64_t seed,
                         const LouvainOptions* louvain_options) {
    if (training.empty()) throw DomainError("c2dc: empty training set");
    if (k < 1) throw DomainError("c2dc: k must be >= 1");

    LouvainOptions opts;
    if (louvain_options != nullptr) opts = *louvain_options;
    opts.seed = seed;

    C2dcResult res;
    res.partition = louvain(graph, opts);

    // Training users grouped by community; users outside the graph cannot be
    // candidates anywhere.
    std::vector<std::vector<LabeledUser>> by_comm(res.partition.community_count);
    for (const LabeledUser& t : training) {
        if (t.user >= graph.vertex_count) continue;
        by_comm[res.partition.assignment[t.user]].push_back(t);
    }

    res.predictions.assign(queries.size(), {});
    std::vector<std::uint8_t> failed(queries.size(), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(queries.size()); ++i) {
        const QueryUser& q = queries[i];
        if (q.user >= graph.vertex_count) {
            failed[i] = 1;
            continue;
        }
        const std::uint32_t c = res.partition.assignment[q.user];
        if (by_comm[c].empty()) {
            Prediction p = knn_vote(q, training, k);
            p.provenance = Provenance::c2dc_fallback;
            p.community = c;
            res.predictions[i] = p;
        } else {
            Prediction p = knn_vote(q, by_comm[c], std::min(k, by_comm[c].size()));
            p.provenance = Provenance::c2dc;
            p.community = c;
            res.predictions[i] = p;
        }
    }

    // Compact out the failed queries, keeping input order.
    std::vector<Prediction> kept;
    kept.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (failed[i]) {
            res.errors.emplace_back(queries[i].user, "query user is not a graph vertex");
        } else {
            kept.push_back(res.predictions[i]);
        }
    }
    res.predictions = std::move(kept);
    return res;
}

}  // namespace psm
