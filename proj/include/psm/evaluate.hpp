#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "psm/action_log.hpp"
#include "psm/classify.hpp"

namespace psm {

struct EvaluationReport {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0, auc = 0.5;
    double truth_psm_fraction = 0.0;
    std::vector<double> fold_f1;  // populated by cross-validation
    double fold_f1_variance = 0.0;
    std::vector<std::string> warnings;
};

// Standard binary metrics with PSM as the positive class; AUC by rank-sum
// over prediction scores with ties averaged. Every predicted user needs a
// truth label; an empty prediction set is a domain error.
EvaluationReport score(std::span<const Prediction> predictions,
                       const std::unordered_map<UserId, Label>& truth);

// Time-prefix restrictions [t_min, t_min + x% * (t_max - t_min)] for each
// percentage; fractions are percents in (0, 100].
std::vector<ActionLog> prefix_subsets(const ActionLog& log,
                                      std::span<const double> fractions);

// Trains on `train`, classifies `queries`, ignoring query labels.
using Classifier = std::function<std::vector<Prediction>(
    const std::vector<LabeledUser>& train, const std::vector<QueryUser>& queries)>;

// Seeded stratified k-fold cross-validation; confusion counts aggregate
// across folds, AUC pools all fold predictions, per-fold F1 variance is
// reported. Needs at least `folds` labeled users.
EvaluationReport cross_validate(const std::vector<LabeledUser>& data,
                                const Classifier& classifier, std::size_t folds,
                                std::uint64_t seed);

struct TimelinessConfig {
    Timestamp period_length = 10 * kSecondsPerDay;
    double train_fraction = 0.5;
    std::size_t max_periods = 0;  // 0: periods cover the first half of the span
    std::uint64_t seed = 0;
};

struct TimelinessReport {
    std::vector<Interval> periods;  // [start, end) as half-open ranges
    std::vector<std::uint64_t> tp_per_period;
    std::vector<std::uint64_t> fp_per_period;
    std::uint64_t remaining = 0;      // held-out first-period PSMs never caught
    std::uint64_t holdout_psm = 0;    // evaluated first-period PSM count
    std::uint64_t holdout_normal = 0;
};

// Per-user causality vectors from a prefix of the log, indexed by user id.
using Vectorizer = std::function<std::vector<CausalityVector>(const ActionLog& prefix)>;

// Builds the per-period classifier from the data available at that point, so
// graph-based classifiers never see future co-posts.
using ClassifierFactory = std::function<Classifier(const ActionLog& prefix)>;

// Rolling early-detection protocol: train on a seeded fraction of the
// first-period users, evaluate the held-out rest, then re-score the still
// misclassified PSMs (and the not-yet-flagged normals) each period while the
// training set grows with the users first active in that period. Requires
// the log to span at least two periods.
TimelinessReport timeliness(const ActionLog& log, const std::vector<Label>& truth,
                            const Vectorizer& vectorizer, const ClassifierFactory& factory,
                            const TimelinessConfig& config);

inline TimelinessReport timeliness(const ActionLog& log, const std::vector<Label>& truth,
                                   const Vectorizer& vectorizer,
                                   const Classifier& classifier,
                                   const TimelinessConfig& config) {
    return timeliness(
        log, truth, vectorizer,
        ClassifierFactory([&classifier](const ActionLog&) { return classifier; }), config);
}

}  // namespace psm
