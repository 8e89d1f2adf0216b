#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psm/causal.hpp"
#include "psm/graph.hpp"

namespace psm {

// Per-metric decision thresholds; the defaults follow the usual 0.7 rule
// with 7 for the relative-likelihood metric.
struct ThresholdRule {
    std::array<double, kMetricCount> thresholds{0.7, 7.0, 0.7, 0.7};

    double get(Metric m) const { return thresholds[static_cast<int>(m)]; }
    void set(Metric m, double v) { thresholds[static_cast<int>(m)] = v; }
};

// Training sample: imputed feature vector plus the definedness mask kept for
// audit.
struct LabeledUser {
    UserId user = 0;
    Label label = Label::normal;
    std::array<double, 4> x{};
    std::uint8_t mask = 0;
};

struct QueryUser {
    UserId user = 0;
    std::array<double, 4> x{};
    std::uint8_t mask = 0;
};

LabeledUser make_labeled(const CausalityVector& v, Label label);
QueryUser make_query(const CausalityVector& v);

enum class Provenance : std::uint8_t { threshold, knn, c2dc, c2dc_fallback };

struct Prediction {
    UserId user = 0;
    Label predicted = Label::normal;
    double score = 0.0;  // in [0,1]; PSM-likelihood ranking for AUC
    Provenance provenance = Provenance::knn;
    Metric threshold_metric = Metric::km;  // valid for threshold provenance
    std::uint32_t community = 0;           // valid for c2dc provenance
};

std::string provenance_string(const Prediction& p);

// Predicts PSM iff the metric value crosses its threshold; undefined values
// classify as normal with score 0. Scores rank by value/threshold, clamped
// to [0,1].
std::vector<Prediction> threshold_classify(std::span<const CausalityVector> vectors,
                                           const ThresholdRule& rule, Metric metric);

// Majority vote over the k nearest training vectors (Euclidean); distance
// ties break by user id, label ties go to PSM. k is clamped to the training
// size. Empty training sets and k < 1 are domain errors.
Prediction knn_classify(const QueryUser& query, std::span<const LabeledUser> training,
                        std::size_t k);

std::vector<Prediction> knn_classify_all(std::span<const QueryUser> queries,
                                         std::span<const LabeledUser> training, std::size_t k);

struct C2dcResult {
    std::vector<Prediction> predictions;
    std::vector<std::pair<UserId, std::string>> errors;  // per-query failures
    CommunityPartition partition;
};

// Community-restricted KNN: one Louvain pass over the co-posting graph, then
// each query is classified against the labeled users of its own community
// (k clamped to what is available). Communities with no labeled users fall
// back to global KNN, flagged in the provenance. Queries that are not graph
// vertices produce per-query error entries; the batch continues.
C2dcResult c2dc_classify(std::span<const QueryUser> queries,
                         std::span<const LabeledUser> training, const CoPostGraph& graph,
                         std::size_t k, std::uint64_t seed,
                         const LouvainOptions* louvain_options = nullptr);

}  // namespace psm
