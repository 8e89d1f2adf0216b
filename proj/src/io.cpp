#include "psm/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace psm::io {

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

namespace {

const char* kMetricHeaders[2][4] = {{"km", "rel", "nb", "wnb"},
                                    {"xi_km", "xi_rel", "xi_nb", "xi_wnb"}};

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(line, "bad number '" + s + "'");
    return v;
}

}  // namespace

void write_vectors_csv(std::ostream& out, const std::vector<CausalityVector>& vectors,
                       const ActionLog& log, bool decay_metrics) {
    const auto* h = kMetricHeaders[decay_metrics ? 1 : 0];
    out << "user_id," << h[0] << ',' << h[1] << ',' << h[2] << ',' << h[3]
        << ",defined_mask\n";
    for (const CausalityVector& v : vectors) {
        out << log.user_name(v.user);
        for (int k = 0; k < kMetricCount; ++k) {
            out << ',';
            if (const auto val = v.get(static_cast<Metric>(k))) out << format_double(*val);
        }
        out << ',' << static_cast<int>(v.defined_mask()) << '\n';
    }
}

void write_vectors_json(std::ostream& out, const std::vector<CausalityVector>& vectors,
                        const ActionLog& log, bool decay_metrics) {
    const auto* h = kMetricHeaders[decay_metrics ? 1 : 0];
    nlohmann::ordered_json root = nlohmann::ordered_json::array();
    for (const CausalityVector& v : vectors) {
        nlohmann::ordered_json o;
        o["user_id"] = log.user_name(v.user);
        for (int k = 0; k < kMetricCount; ++k) {
            const auto val = v.get(static_cast<Metric>(k));
            if (val)
                o[h[k]] = *val;
            else
                o[h[k]] = nullptr;
        }
        o["defined_mask"] = v.defined_mask();
        root.push_back(std::move(o));
    }
    out << root.dump(2) << '\n';
}

std::vector<CausalityVector> read_vectors_csv(std::istream& in, const ActionLog& log) {
    std::vector<CausalityVector> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (line_no == 1 && fields[0] == "user_id") continue;
        if (fields.size() != 6) throw ParseError(line_no, "expected 6 columns");
        const auto user = log.find_user(fields[0]);
        if (!user) throw ParseError(line_no, "unknown user '" + fields[0] + "'");
        CausalityVector v;
        v.user = *user;
        v.interval = log.time_span();
        for (int k = 0; k < kMetricCount; ++k)
            if (!fields[1 + k].empty())
                v.set(static_cast<Metric>(k), parse_double(fields[1 + k], line_no));
        out.push_back(v);
    }
    return out;
}

void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions,
                           const ActionLog& log) {
    out << "user_id,predicted,score,provenance\n";
    for (const Prediction& p : predictions)
        out << log.user_name(p.user) << ','
            << (p.predicted == Label::psm ? "psm" : "normal") << ','
            << format_double(p.score) << ',' << provenance_string(p) << '\n';
}

std::vector<ExternalPrediction> read_predictions_csv(std::istream& in) {
    std::vector<ExternalPrediction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (line_no == 1 && fields[0] == "user_id") continue;
        if (fields.size() < 3) throw ParseError(line_no, "expected at least 3 columns");
        ExternalPrediction p;
        p.user = fields[0];
        if (fields[1] == "psm")
            p.predicted = Label::psm;
        else if (fields[1] == "normal")
            p.predicted = Label::normal;
        else
            throw ParseError(line_no, "label must be psm or normal");
        p.score = parse_double(fields[2], line_no);
        out.push_back(std::move(p));
    }
    return out;
}

void write_labels_csv(std::ostream& out, const std::vector<Label>& labels,
                      const ActionLog& log) {
    out << "user_id,label\n";
    for (UserId u = 0; u < labels.size(); ++u)
        out << log.user_name(u) << ',' << (labels[u] == Label::psm ? "psm" : "normal")
            << '\n';
}

std::unordered_map<std::string, Label> read_labels_csv(std::istream& in) {
    std::unordered_map<std::string, Label> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (line_no == 1 && fields[0] == "user_id") continue;
        if (fields.size() != 2) throw ParseError(line_no, "expected 2 columns");
        if (fields[1] == "psm")
            out[fields[0]] = Label::psm;
        else if (fields[1] == "normal")
            out[fields[0]] = Label::normal;
        else
            throw ParseError(line_no, "label must be psm or normal");
    }
    return out;
}

void write_partition_csv(std::ostream& out, const CommunityPartition& partition,
                         const ActionLog& log) {
    out << "user_id,community_id\n";
    for (UserId u = 0; u < partition.assignment.size(); ++u)
        out << log.user_name(u) << ',' << partition.assignment[u] << '\n';
}

std::string stats_json(const LogStats& stats) {
    nlohmann::ordered_json root;
    auto& hist = root["size_histogram"] = nlohmann::ordered_json::array();
    for (const auto& [size, count] : stats.size_histogram)
        hist.push_back({{"size", size}, {"count", count}});
    auto& cdf = root["duration_cdf"] = nlohmann::ordered_json::array();
    for (const auto& [duration, fraction] : stats.duration_cdf)
        cdf.push_back({{"duration", duration}, {"cumulative", fraction}});
    auto& per = root["per_cascade"] = nlohmann::ordered_json::array();
    for (const auto& c : stats.per_cascade)
        per.push_back({{"message", c.message},
                       {"size", c.size},
                       {"duration", c.duration},
                       {"viral", c.viral}});
    return root.dump(2);
}

std::string report_json(const EvaluationReport& r) {
    nlohmann::ordered_json root;
    root["precision"] = r.precision;
    root["recall"] = r.recall;
    root["f1"] = r.f1;
    root["auc"] = r.auc;
    root["confusion"] = {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}};
    root["truth_psm_fraction"] = r.truth_psm_fraction;
    if (!r.fold_f1.empty()) {
        root["fold_f1"] = r.fold_f1;
        root["fold_f1_variance"] = r.fold_f1_variance;
    }
    if (!r.warnings.empty()) root["warnings"] = r.warnings;
    return root.dump(2);
}

std::string cohesion_json(const CohesionTestResult& r) {
    nlohmann::ordered_json root;
    root["t_statistic"] = r.t_statistic;
    root["p_value"] = r.p_value;
    root["reject_at"] = r.reject_at;
    root["rejected"] = r.rejected;
    root["within_sample_size"] = r.within.size();
    root["cross_sample_size"] = r.cross.size();
    return root.dump(2);
}

std::string timeliness_json(const TimelinessReport& r) {
    nlohmann::ordered_json root;
    auto& periods = root["periods"] = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < r.periods.size(); ++p)
        periods.push_back({{"start", r.periods[p].lo},
                           {"end", r.periods[p].hi},
                           {"tp", r.tp_per_period[p]},
                           {"fp", r.fp_per_period[p]}});
    root["remaining"] = r.remaining;
    root["holdout_psm"] = r.holdout_psm;
    root["holdout_normal"] = r.holdout_normal;
    return root.dump(2);
}

void write_timeliness_csv(std::ostream& out, const TimelinessReport& r) {
    out << "period_start,period_end,tp,fp\n";
    for (std::size_t p = 0; p < r.periods.size(); ++p)
        out << r.periods[p].lo << ',' << r.periods[p].hi << ',' << r.tp_per_period[p] << ','
            << r.fp_per_period[p] << '\n';
    out << "remaining," << r.remaining << ",,\n";
}

}  // namespace psm::io
