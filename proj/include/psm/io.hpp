#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "psm/action_log.hpp"
#include "psm/causal.hpp"
#include "psm/classify.hpp"
#include "psm/evaluate.hpp"
#include "psm/graph.hpp"

namespace psm::io {

// Shortest round-trip decimal form; keeps repeated runs byte-identical.
std::string format_double(double v);

// Per-user causality vectors: user_id, the four metric columns (empty when
// undefined) and a 4-bit defined_mask column. Decay vectors use xi_-prefixed
// headers.
void write_vectors_csv(std::ostream& out, const std::vector<CausalityVector>& vectors,
                       const ActionLog& log, bool decay_metrics);
void write_vectors_json(std::ostream& out, const std::vector<CausalityVector>& vectors,
                        const ActionLog& log, bool decay_metrics);
std::vector<CausalityVector> read_vectors_csv(std::istream& in, const ActionLog& log);

void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions,
                           const ActionLog& log);
// External prediction files for baseline comparison: user_id,predicted,score
// (provenance optional, ignored).
struct ExternalPrediction {
    std::string user;
    Label predicted = Label::normal;
    double score = 0.0;
};
std::vector<ExternalPrediction> read_predictions_csv(std::istream& in);

void write_labels_csv(std::ostream& out, const std::vector<Label>& labels,
                      const ActionLog& log);
std::unordered_map<std::string, Label> read_labels_csv(std::istream& in);

void write_partition_csv(std::ostream& out, const CommunityPartition& partition,
                         const ActionLog& log);

std::string stats_json(const LogStats& stats);
std::string report_json(const EvaluationReport& report);
std::string cohesion_json(const CohesionTestResult& result);
std::string timeliness_json(const TimelinessReport& report);
// Table-shaped CSV: period_start,period_end,tp,fp rows plus a remaining footer.
void write_timeliness_csv(std::ostream& out, const TimelinessReport& report);

}  // namespace psm::io
