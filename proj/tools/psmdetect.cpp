// psmdetect: causality metrics and early-detection pipeline over action logs.
//
// Subcommands cover the whole pipeline: ingest, stats, metrics (causal),
// decay, graph, communities, ttest, classify (threshold|knn|c2dc), evaluate,
// timeline and synth. Every run honors a declarative JSON config plus flag
// overrides, logs its effective configuration, and is reproducible for a
// fixed seed and any worker count.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "psm/causal.hpp"
#include "psm/classify.hpp"
#include "psm/decay.hpp"
#include "psm/evaluate.hpp"
#include "psm/graph.hpp"
#include "psm/io.hpp"
#include "psm/pipeline_config.hpp"
#include "psm/synth.hpp"

namespace {

using namespace psm;

constexpr const char* kVersion = "0.1.0";

// Missing or unreadable inputs are usage errors (exit 2), distinct from
// validation failures inside well-formed inputs (exit 1).
struct UsageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GlobalOpts {
    std::string config_path;
    std::string output_dir;
    PipelineConfig cfg;
    // Flag overrides, applied after the config file loads.
    std::optional<std::uint64_t> theta;
    std::optional<double> phi;
    std::optional<std::string> rho_mode;
    std::optional<double> rho;
    std::optional<double> alpha;
    std::optional<double> delta_days;
    std::optional<double> sigma;
    std::optional<std::string> grid;
    std::optional<std::size_t> k;
    std::optional<std::size_t> folds;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;

    void finalize() {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot open config '" + config_path + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            cfg = PipelineConfig::from_json_text(buf.str());
        }
        if (theta) cfg.theta = *theta;
        if (phi) cfg.phi = *phi;
        if (rho_mode) {
            if (*rho_mode == "computed") cfg.causal.rho_mode = RhoMode::computed;
            else if (*rho_mode == "fixed") cfg.causal.rho_mode = RhoMode::fixed;
            else throw ConfigError("rho mode must be 'computed' or 'fixed'");
        }
        if (rho) cfg.causal.rho = *rho;
        if (alpha) cfg.causal.alpha = *alpha;
        if (delta_days) cfg.decay.delta = days(*delta_days);
        if (sigma) cfg.decay.sigma_per_day = *sigma;
        if (grid) {
            if (*grid == "strict") cfg.decay.grid = DecayConfig::Grid::strict;
            else if (*grid == "include_final")
                cfg.decay.grid = DecayConfig::Grid::include_final;
            else throw ConfigError("grid must be 'strict' or 'include_final'");
        }
        if (k) cfg.k = *k;
        if (folds) cfg.folds = *folds;
        if (seed) {
            cfg.seed = *seed;
            cfg.synth.seed = *seed;
        }
        if (threads) cfg.threads = *threads;
        cfg.validate();
#ifdef _OPENMP
        if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
        if (!output_dir.empty()) std::filesystem::create_directories(output_dir);
    }

    std::string resolve_out(const std::string& flag, const std::string& fallback) const {
        if (!flag.empty()) return flag;
        if (!output_dir.empty())
            return (std::filesystem::path(output_dir) / fallback).string();
        return fallback;
    }

    void write_manifest(const std::string& command) const {
        const std::string text = cfg.to_json_text();
        std::uint64_t hash = 1469598103934665603ull;  // FNV-1a
        for (unsigned char c : text) {
            hash ^= c;
            hash *= 1099511628211ull;
        }
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));

        nlohmann::ordered_json manifest;
        manifest["tool"] = std::string("psmdetect ") + kVersion;
        manifest["command"] = command;
        manifest["config"] = nlohmann::ordered_json::parse(text);
        manifest["config_hash"] = hex;
        manifest["seed"] = cfg.seed;
        manifest["threads"] = cfg.threads;
        std::cerr << "[psmdetect] " << command << " seed=" << cfg.seed
                  << " config_hash=" << hex << '\n';
        if (!output_dir.empty()) {
            std::ofstream out(std::filesystem::path(output_dir) / "run_manifest.json");
            out << manifest.dump(2) << '\n';
        }
    }
};

void require_readable(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path))
        throw UsageFailure(std::string(what) + " '" + path + "' does not exist");
}

LogFormat parse_format(const std::string& name) {
    if (name == "csv") return LogFormat::csv;
    if (name == "jsonl") return LogFormat::jsonl;
    throw ConfigError("format must be 'csv' or 'jsonl'");
}

ActionLog load_log(const std::string& path, const std::string& format, bool dedup = true) {
    require_readable(path, "input log");
    return parse_action_log_file(path, parse_format(format), dedup);
}

template <typename Fn>
void write_file(const std::string& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    fn(out);
}

// Labels file keyed by raw user id, mapped onto the log's vocabulary.
std::vector<std::optional<Label>> labels_for_log(const std::string& path,
                                                 const ActionLog& log) {
    std::ifstream in(path);
    if (!in) throw UsageFailure("cannot open labels '" + path + "'");
    const auto raw = io::read_labels_csv(in);
    std::vector<std::optional<Label>> out(log.user_count());
    for (const auto& [name, label] : raw)
        if (const auto u = log.find_user(name)) out[*u] = label;
    return out;
}

std::vector<CausalityVector> compute_causal_vectors(const ActionLog& log,
                                                    const PipelineConfig& cfg) {
    CausalEngine engine(log, extract_cascades(log, cfg.theta, cfg.phi), cfg.causal);
    return engine.all_vectors();
}

std::vector<CausalityVector> compute_decay_vectors(const ActionLog& log,
                                                   const PipelineConfig& cfg) {
    if (log.empty()) {
        std::vector<CausalityVector> out(log.user_count());
        for (UserId u = 0; u < out.size(); ++u) out[u].user = u;
        return out;
    }
    try {
        return all_decay_vectors(log.time_span(), log, cfg.decay, cfg.theta, cfg.phi,
                                 cfg.causal);
    } catch (const DomainError&) {
        // Interval shorter than the window grid: no signal yet.
        std::vector<CausalityVector> out(log.user_count());
        for (UserId u = 0; u < out.size(); ++u) out[u].user = u;
        return out;
    }
}

Vectorizer make_vectorizer(const std::string& kind, const PipelineConfig& cfg) {
    if (kind == "causal")
        return [cfg](const ActionLog& prefix) { return compute_causal_vectors(prefix, cfg); };
    if (kind == "decay")
        return [cfg](const ActionLog& prefix) { return compute_decay_vectors(prefix, cfg); };
    throw ConfigError("vector kind must be 'causal' or 'decay'");
}

Classifier make_classifier(const std::string& kind, const PipelineConfig& cfg,
                           const CoPostGraph* graph, Metric metric,
                           bool weighted_louvain = false, double resolution = 1.0) {
    if (kind == "threshold") {
        const ThresholdRule rule = cfg.thresholds;
        return [rule, metric](const std::vector<LabeledUser>&,
                              const std::vector<QueryUser>& queries) {
            std::vector<CausalityVector> vecs;
            vecs.reserve(queries.size());
            for (const QueryUser& q : queries) {
                CausalityVector v;
                v.user = q.user;
                for (int m = 0; m < kMetricCount; ++m)
                    if (q.mask & (1u << m)) v.set(static_cast<Metric>(m), q.x[m]);
                vecs.push_back(v);
            }
            return threshold_classify(vecs, rule, metric);
        };
    }
    if (kind == "knn") {
        const std::size_t k = cfg.k;
        return [k](const std::vector<LabeledUser>& train,
                   const std::vector<QueryUser>& queries) {
            return knn_classify_all(queries, train, k);
        };
    }
    if (kind == "c2dc") {
        if (graph == nullptr) throw ConfigError("c2dc needs the co-posting graph (--in log)");
        const std::size_t k = cfg.k;
        const std::uint64_t seed = cfg.seed;
        const LouvainOptions opts{seed, resolution, weighted_louvain};
        return [graph, k, seed, opts](const std::vector<LabeledUser>& train,
                                      const std::vector<QueryUser>& queries) {
            return c2dc_classify(queries, train, *graph, k, seed, &opts).predictions;
        };
    }
    throw ConfigError("classifier must be 'threshold', 'knn' or 'c2dc'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causality-metric early detection over social action logs"};
    app.set_version_flag("--version", std::string("psmdetect ") + kVersion);
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "Pipeline config JSON file");
    app.add_option("--output-dir", g.output_dir,
                   "Directory collecting outputs plus run_manifest.json");
    app.add_option("--theta", g.theta, "Viral size threshold");
    app.add_option("--phi", g.phi, "Key-user fraction in (0,1)");
    app.add_option("--rho-mode", g.rho_mode, "Prior mode: computed|fixed");
    app.add_option("--rho", g.rho, "Fixed prior value");
    app.add_option("--alpha", g.alpha, "Relative-likelihood smoothing");
    app.add_option("--delta", g.delta_days, "Decay window length, days");
    app.add_option("--sigma", g.sigma, "Decay scale per day");
    app.add_option("--grid", g.grid, "Window grid: strict|include_final");
    app.add_option("--k", g.k, "Neighbor count for knn/c2dc");
    app.add_option("--folds", g.folds, "Cross-validation folds");
    app.add_option("--seed", g.seed, "Run seed");
    app.add_option("--threads", g.threads, "Worker threads (0 = library default)");

    // --- ingest ---------------------------------------------------------
    struct {
        std::string in, format = "csv", out;
        bool no_dedup = false;
    } ingest;
    auto* cmd_ingest = app.add_subcommand("ingest", "Validate and canonicalize a log");
    cmd_ingest->add_option("--in", ingest.in, "Input log")->required();
    cmd_ingest->add_option("--format", ingest.format, "csv|jsonl");
    cmd_ingest->add_option("--out", ingest.out, "Canonical CSV output");
    cmd_ingest->add_flag("--no-dedup", ingest.no_dedup, "Keep duplicate (user,message) rows");

    // --- stats ----------------------------------------------------------
    struct {
        std::string in, format = "csv", out;
    } stats;
    auto* cmd_stats = app.add_subcommand("stats", "Cascade size/duration distributions");
    cmd_stats->add_option("--in", stats.in)->required();
    cmd_stats->add_option("--format", stats.format);
    cmd_stats->add_option("--out", stats.out, "Stats JSON output");

    // --- metrics / decay --------------------------------------------------
    struct {
        std::string in, format = "csv", out;
        std::optional<Timestamp> from, to;
        bool json = false;
    } metrics, decay_cmd;
    auto* cmd_metrics = app.add_subcommand("metrics", "Causal metric vectors per user");
    cmd_metrics->add_option("--in", metrics.in)->required();
    cmd_metrics->add_option("--format", metrics.format);
    cmd_metrics->add_option("--out", metrics.out, "Vector CSV output");
    cmd_metrics->add_option("--from", metrics.from, "Interval start, epoch seconds");
    cmd_metrics->add_option("--to", metrics.to, "Interval end, epoch seconds");
    cmd_metrics->add_flag("--json", metrics.json, "Emit JSON instead of CSV");

    auto* cmd_decay = app.add_subcommand("decay", "Time-decay metric vectors per user");
    cmd_decay->add_option("--in", decay_cmd.in)->required();
    cmd_decay->add_option("--format", decay_cmd.format);
    cmd_decay->add_option("--out", decay_cmd.out, "Vector CSV output");
    cmd_decay->add_option("--from", decay_cmd.from, "Interval start, epoch seconds");
    cmd_decay->add_option("--to", decay_cmd.to, "Interval end, epoch seconds");
    cmd_decay->add_flag("--json", decay_cmd.json, "Emit JSON instead of CSV");

    // --- graph / communities ---------------------------------------------
    struct {
        std::string in, format = "csv", out;
    } graph_cmd;
    auto* cmd_graph = app.add_subcommand("graph", "Co-posting graph edge list");
    cmd_graph->add_option("--in", graph_cmd.in)->required();
    cmd_graph->add_option("--format", graph_cmd.format);
    cmd_graph->add_option("--out", graph_cmd.out, "Edge list output");

    struct {
        std::string in, format = "csv", out;
        double resolution = 1.0;
        bool weighted = false;
    } comm;
    auto* cmd_comm = app.add_subcommand("communities", "Louvain partition of the graph");
    cmd_comm->add_option("--in", comm.in)->required();
    cmd_comm->add_option("--format", comm.format);
    cmd_comm->add_option("--out", comm.out, "Partition CSV output");
    cmd_comm->add_option("--resolution", comm.resolution, "Modularity resolution");
    cmd_comm->add_flag("--weighted", comm.weighted, "Use co-post counts as edge weights");

    // --- ttest ------------------------------------------------------------
    struct {
        std::string in, format = "csv", vectors, out;
        double significance = 0.01;
        bool weighted = false;
        double resolution = 1.0;
    } ttest;
    auto* cmd_ttest = app.add_subcommand("ttest", "Community cohesion hypothesis test");
    cmd_ttest->add_option("--in", ttest.in, "Action log for the graph")->required();
    cmd_ttest->add_option("--format", ttest.format);
    cmd_ttest->add_option("--vectors", ttest.vectors, "Causality vector CSV")->required();
    cmd_ttest->add_option("--out", ttest.out, "Result JSON output");
    cmd_ttest->add_option("--significance", ttest.significance, "Rejection level");
    cmd_ttest->add_flag("--weighted", ttest.weighted, "Weighted Louvain");
    cmd_ttest->add_option("--resolution", ttest.resolution, "Louvain resolution");

    // --- classify -----------------------------------------------------------
    struct {
        std::string mode;  // threshold|knn|c2dc
        std::string vectors, labels, out;
        std::string in, format = "csv";  // log, needed for c2dc
        std::string metric = "wnb";
        std::string queries;  // optional file listing query user ids
        bool weighted = false;
        double resolution = 1.0;
    } cls;
    auto* cmd_classify = app.add_subcommand("classify", "Classify users as psm/normal");
    cmd_classify->add_option("mode", cls.mode, "threshold|knn|c2dc")->required();
    cmd_classify->add_option("--vectors", cls.vectors, "Vector CSV")->required();
    cmd_classify->add_option("--labels", cls.labels, "Training labels CSV");
    cmd_classify->add_option("--in", cls.in, "Action log (c2dc graph, vector user space)")
        ->required();
    cmd_classify->add_option("--format", cls.format);
    cmd_classify->add_option("--metric", cls.metric, "Metric for threshold mode");
    cmd_classify->add_option("--queries", cls.queries, "File of query user ids, one per line");
    cmd_classify->add_option("--out", cls.out, "Predictions CSV output");
    cmd_classify->add_flag("--weighted", cls.weighted, "Weighted Louvain for c2dc");
    cmd_classify->add_option("--resolution", cls.resolution, "Louvain resolution for c2dc");

    // --- evaluate ------------------------------------------------------------
    struct {
        std::string predictions, truth;  // score mode
        bool cv = false;
        std::string vectors, labels, classifier = "c2dc", metric = "wnb";
        std::string in, format = "csv";
        std::string out;
        bool weighted = false;
        double resolution = 1.0;
    } eval;
    auto* cmd_eval = app.add_subcommand("evaluate", "Score predictions or cross-validate");
    cmd_eval->add_option("--predictions", eval.predictions, "External predictions CSV");
    cmd_eval->add_option("--truth", eval.truth, "Ground-truth labels CSV");
    cmd_eval->add_flag("--cv", eval.cv, "Run seeded stratified cross-validation");
    cmd_eval->add_option("--vectors", eval.vectors, "Vector CSV (cv mode)");
    cmd_eval->add_option("--labels", eval.labels, "Labels CSV (cv mode)");
    cmd_eval->add_option("--classifier", eval.classifier, "threshold|knn|c2dc (cv mode)");
    cmd_eval->add_option("--metric", eval.metric, "Metric for threshold classifier");
    cmd_eval->add_option("--in", eval.in, "Action log (cv with c2dc)");
    cmd_eval->add_option("--format", eval.format);
    cmd_eval->add_option("--out", eval.out, "Report JSON output");
    cmd_eval->add_flag("--weighted", eval.weighted, "Weighted Louvain for c2dc");
    cmd_eval->add_option("--resolution", eval.resolution, "Louvain resolution for c2dc");

    // --- timeline ---------------------------------------------------------
    struct {
        std::string in, format = "csv", labels, out, csv_out;
        std::string classifier = "c2dc", vectors_kind = "decay", metric = "wnb";
        bool weighted = false;
        double resolution = 1.0;
        double period_days = 10.0;
        double train_fraction = 0.5;
        std::size_t max_periods = 0;
    } timeline;
    auto* cmd_timeline =
        app.add_subcommand("timeline", "Rolling early-detection (timeliness) protocol");
    cmd_timeline->add_option("--in", timeline.in)->required();
    cmd_timeline->add_option("--format", timeline.format);
    cmd_timeline->add_option("--labels", timeline.labels, "Ground-truth labels CSV")
        ->required();
    cmd_timeline->add_option("--classifier", timeline.classifier, "threshold|knn|c2dc");
    cmd_timeline->add_option("--vectors-kind", timeline.vectors_kind, "causal|decay");
    cmd_timeline->add_option("--metric", timeline.metric, "Metric for threshold classifier");
    cmd_timeline->add_option("--period-days", timeline.period_days, "Period length");
    cmd_timeline->add_option("--train-fraction", timeline.train_fraction,
                             "Period-1 training share");
    cmd_timeline->add_option("--max-periods", timeline.max_periods,
                             "Period count (0 = half the span)");
    cmd_timeline->add_option("--out", timeline.out, "Report JSON output");
    cmd_timeline->add_option("--table-out", timeline.csv_out, "Period table CSV output");
    cmd_timeline->add_flag("--weighted", timeline.weighted, "Weighted Louvain for c2dc");
    cmd_timeline->add_option("--resolution", timeline.resolution,
                             "Louvain resolution for c2dc");

    // --- synth -------------------------------------------------------------
    struct {
        std::string out, labels_out;
        std::optional<std::uint32_t> users, messages, max_size, min_size, cell_size;
        std::optional<double> psm_fraction, viral_fraction, exponent, bias, span_days,
            organic;
    } synth_cmd;
    auto* cmd_synth = app.add_subcommand("synth", "Seeded synthetic benchmark log");
    cmd_synth->add_option("--out", synth_cmd.out, "Log CSV output");
    cmd_synth->add_option("--labels-out", synth_cmd.labels_out, "Ground-truth labels CSV");
    cmd_synth->add_option("--users", synth_cmd.users, "User count");
    cmd_synth->add_option("--messages", synth_cmd.messages, "Message count");
    cmd_synth->add_option("--max-size", synth_cmd.max_size, "Cascade size cap");
    cmd_synth->add_option("--min-size", synth_cmd.min_size, "Cascade size floor");
    cmd_synth->add_option("--psm-fraction", synth_cmd.psm_fraction, "Planted psm share");
    cmd_synth->add_option("--viral-fraction", synth_cmd.viral_fraction, "Viral share");
    cmd_synth->add_option("--exponent", synth_cmd.exponent, "Cascade size power law");
    cmd_synth->add_option("--bias", synth_cmd.bias, "psm early-position bias");
    cmd_synth->add_option("--cell-size", synth_cmd.cell_size, "psm campaign cell size");
    cmd_synth->add_option("--organic", synth_cmd.organic,
                          "fraction of viral cascades grown without a cell");
    cmd_synth->add_option("--span-days", synth_cmd.span_days, "Log time span");

    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2
    }

    try {
        g.finalize();

        if (cmd_ingest->parsed()) {
            g.write_manifest("ingest");
            const ActionLog log = load_log(ingest.in, ingest.format, !ingest.no_dedup);
            write_file(g.resolve_out(ingest.out, "log.csv"),
                       [&](std::ostream& out) { write_action_log_csv(out, log); });
            std::cout << "actions=" << log.size() << " users=" << log.active_user_count()
                      << " messages=" << log.active_message_count() << '\n';
        } else if (cmd_stats->parsed()) {
            g.write_manifest("stats");
            const ActionLog log = load_log(stats.in, stats.format);
            const CascadeSet cs = extract_cascades(log, g.cfg.theta, g.cfg.phi);
            write_file(g.resolve_out(stats.out, "stats.json"), [&](std::ostream& out) {
                out << io::stats_json(log_stats(log, cs)) << '\n';
            });
            std::cout << "cascades=" << cs.message_count() << " viral=" << cs.viral_count()
                      << '\n';
        } else if (cmd_metrics->parsed() || cmd_decay->parsed()) {
            const bool is_decay = cmd_decay->parsed();
            auto& mc = is_decay ? decay_cmd : metrics;
            g.write_manifest(is_decay ? "decay" : "metrics");
            ActionLog log = load_log(mc.in, mc.format);
            if (mc.from || mc.to) {
                const Interval span = log.time_span();
                log = log.restrict({mc.from.value_or(span.lo), mc.to.value_or(span.hi)});
            }
            const auto vectors = is_decay ? compute_decay_vectors(log, g.cfg)
                                          : compute_causal_vectors(log, g.cfg);
            write_file(g.resolve_out(mc.out, is_decay ? "xi_vectors.csv" : "vectors.csv"),
                       [&](std::ostream& out) {
                           if (mc.json)
                               io::write_vectors_json(out, vectors, log, is_decay);
                           else
                               io::write_vectors_csv(out, vectors, log, is_decay);
                       });
            std::size_t defined = 0;
            for (const auto& v : vectors)
                if (v.defined_mask() != 0) ++defined;
            std::cout << "users=" << vectors.size() << " with_signal=" << defined << '\n';
        } else if (cmd_graph->parsed()) {
            g.write_manifest("graph");
            const ActionLog log = load_log(graph_cmd.in, graph_cmd.format);
            const CoPostGraph graph = build_graph(log);
            write_file(g.resolve_out(graph_cmd.out, "edges.txt"),
                       [&](std::ostream& out) { write_graph_edges(out, graph, log); });
            std::cout << "vertices=" << graph.vertex_count << " edges=" << graph.edge_count
                      << '\n';
        } else if (cmd_comm->parsed()) {
            g.write_manifest("communities");
            const ActionLog log = load_log(comm.in, comm.format);
            const CoPostGraph graph = build_graph(log);
            const CommunityPartition part =
                louvain(graph, {g.cfg.seed, comm.resolution, comm.weighted});
            write_file(g.resolve_out(comm.out, "partition.csv"),
                       [&](std::ostream& out) { io::write_partition_csv(out, part, log); });
            std::cout << "communities=" << part.community_count
                      << " modularity=" << io::format_double(part.modularity) << '\n';
        } else if (cmd_ttest->parsed()) {
            g.write_manifest("ttest");
            const ActionLog log = load_log(ttest.in, ttest.format);
            std::ifstream vin(ttest.vectors);
            if (!vin) throw UsageFailure("cannot open vectors '" + ttest.vectors + "'");
            const auto vectors = io::read_vectors_csv(vin, log);
            std::vector<std::array<double, 4>> imputed(log.user_count(), {0, 0, 0, 0});
            for (const auto& v : vectors) imputed[v.user] = v.imputed();
            const CoPostGraph graph = build_graph(log);
            const CommunityPartition part =
                louvain(graph, {g.cfg.seed, ttest.resolution, ttest.weighted});
            const CohesionTestResult res =
                cohesion_test(part, imputed, g.cfg.seed, ttest.significance);
            write_file(g.resolve_out(ttest.out, "ttest.json"), [&](std::ostream& out) {
                out << io::cohesion_json(res) << '\n';
            });
            std::cout << "t=" << io::format_double(res.t_statistic)
                      << " p=" << io::format_double(res.p_value)
                      << " rejected=" << (res.rejected ? "yes" : "no") << '\n';
        } else if (cmd_classify->parsed()) {
            g.write_manifest("classify " + cls.mode);
            const ActionLog log = load_log(cls.in, cls.format);
            std::ifstream vin(cls.vectors);
            if (!vin) throw UsageFailure("cannot open vectors '" + cls.vectors + "'");
            const auto vectors = io::read_vectors_csv(vin, log);

            std::vector<Prediction> predictions;
            if (cls.mode == "threshold") {
                predictions =
                    threshold_classify(vectors, g.cfg.thresholds, metric_from_name(cls.metric));
            } else {
                if (cls.labels.empty())
                    throw ConfigError("knn/c2dc need --labels with training users");
                const auto labels = labels_for_log(cls.labels, log);
                std::vector<LabeledUser> train;
                std::vector<QueryUser> queries;
                std::vector<std::uint8_t> is_query(log.user_count(), 0);
                if (!cls.queries.empty()) {
                    std::ifstream qin(cls.queries);
                    if (!qin) throw UsageFailure("cannot open queries '" + cls.queries + "'");
                    std::string name;
                    while (std::getline(qin, name)) {
                        if (name.empty()) continue;
                        const auto u = log.find_user(name);
                        if (!u) throw ValidationError("unknown query user '" + name + "'");
                        is_query[*u] = 1;
                    }
                }
                for (const auto& v : vectors) {
                    if (!cls.queries.empty() && is_query[v.user])
                        queries.push_back(make_query(v));
                    else if (labels[v.user])
                        train.push_back(make_labeled(v, *labels[v.user]));
                    else if (cls.queries.empty())
                        queries.push_back(make_query(v));
                }
                if (cls.mode == "knn") {
                    predictions = knn_classify_all(queries, train, g.cfg.k);
                } else if (cls.mode == "c2dc") {
                    const CoPostGraph graph = build_graph(log);
                    const LouvainOptions opts{g.cfg.seed, cls.resolution, cls.weighted};
                    C2dcResult res =
                        c2dc_classify(queries, train, graph, g.cfg.k, g.cfg.seed, &opts);
                    for (const auto& [user, what] : res.errors)
                        std::cerr << "[psmdetect] query " << log.user_name(user)
                                  << " skipped: " << what << '\n';
                    predictions = std::move(res.predictions);
                } else {
                    throw ConfigError("classify mode must be threshold|knn|c2dc");
                }
            }
            write_file(g.resolve_out(cls.out, "predictions.csv"), [&](std::ostream& out) {
                io::write_predictions_csv(out, predictions, log);
            });
            std::size_t psm = 0;
            for (const auto& p : predictions)
                if (p.predicted == Label::psm) ++psm;
            std::cout << "queries=" << predictions.size() << " flagged_psm=" << psm << '\n';
        } else if (cmd_eval->parsed()) {
            g.write_manifest("evaluate");
            EvaluationReport report;
            if (eval.cv) {
                if (eval.vectors.empty() || eval.labels.empty() || eval.in.empty())
                    throw ConfigError("evaluate --cv needs --vectors, --labels and --in");
                const ActionLog log = load_log(eval.in, eval.format);
                std::ifstream vin(eval.vectors);
                if (!vin) throw UsageFailure("cannot open vectors '" + eval.vectors + "'");
                const auto vectors = io::read_vectors_csv(vin, log);
                const auto labels = labels_for_log(eval.labels, log);
                std::vector<LabeledUser> data;
                for (const auto& v : vectors)
                    if (labels[v.user]) data.push_back(make_labeled(v, *labels[v.user]));
                CoPostGraph graph;
                if (eval.classifier == "c2dc") graph = build_graph(log);
                const Classifier classifier = make_classifier(
                    eval.classifier, g.cfg, eval.classifier == "c2dc" ? &graph : nullptr,
                    metric_from_name(eval.metric), eval.weighted, eval.resolution);
                report = cross_validate(data, classifier, g.cfg.folds, g.cfg.seed);
            } else {
                if (eval.predictions.empty() || eval.truth.empty())
                    throw ConfigError("evaluate needs --predictions and --truth (or --cv)");
                std::ifstream pin(eval.predictions);
                if (!pin)
                    throw UsageFailure("cannot open predictions '" + eval.predictions + "'");
                const auto ext = io::read_predictions_csv(pin);
                std::ifstream tin(eval.truth);
                if (!tin) throw UsageFailure("cannot open truth '" + eval.truth + "'");
                const auto truth_by_name = io::read_labels_csv(tin);

                // External files carry raw names; give them a local id space.
                std::unordered_map<std::string, UserId> ids;
                std::unordered_map<UserId, Label> truth;
                std::vector<Prediction> preds;
                for (const auto& e : ext) {
                    const auto it = truth_by_name.find(e.user);
                    if (it == truth_by_name.end())
                        throw DomainError("no truth label for user '" + e.user + "'");
                    const auto [pos, fresh] =
                        ids.emplace(e.user, static_cast<UserId>(ids.size()));
                    Prediction p;
                    p.user = pos->second;
                    p.predicted = e.predicted;
                    p.score = e.score;
                    preds.push_back(p);
                    truth[pos->second] = it->second;
                }
                report = score(preds, truth);
            }
            write_file(g.resolve_out(eval.out, "report.json"), [&](std::ostream& out) {
                out << io::report_json(report) << '\n';
            });
            std::cout << "precision=" << io::format_double(report.precision)
                      << " recall=" << io::format_double(report.recall)
                      << " f1=" << io::format_double(report.f1)
                      << " auc=" << io::format_double(report.auc) << '\n';
        } else if (cmd_timeline->parsed()) {
            g.write_manifest("timeline");
            const ActionLog log = load_log(timeline.in, timeline.format);
            const auto maybe_labels = labels_for_log(timeline.labels, log);
            std::vector<Label> truth(log.user_count(), Label::normal);
            for (UserId u = 0; u < truth.size(); ++u) {
                if (!maybe_labels[u])
                    throw ValidationError("timeline labels must cover every user");
                truth[u] = *maybe_labels[u];
            }
            // Graph-based classification per period only sees that period's
            // prefix of the log.
            const ClassifierFactory factory = [&](const ActionLog& prefix) -> Classifier {
                if (timeline.classifier != "c2dc")
                    return make_classifier(timeline.classifier, g.cfg, nullptr,
                                           metric_from_name(timeline.metric));
                auto graph = std::make_shared<CoPostGraph>(build_graph(prefix));
                const Classifier inner = make_classifier(
                    "c2dc", g.cfg, graph.get(), metric_from_name(timeline.metric),
                    timeline.weighted, timeline.resolution);
                return [graph, inner](const std::vector<LabeledUser>& train,
                                      const std::vector<QueryUser>& queries) {
                    return inner(train, queries);
                };
            };
            TimelinessConfig tcfg;
            tcfg.period_length = days(timeline.period_days);
            tcfg.train_fraction = timeline.train_fraction;
            tcfg.max_periods = timeline.max_periods;
            tcfg.seed = g.cfg.seed;
            const TimelinessReport report = timeliness(
                log, truth, make_vectorizer(timeline.vectors_kind, g.cfg), factory, tcfg);
            write_file(g.resolve_out(timeline.out, "timeline.json"), [&](std::ostream& out) {
                out << io::timeliness_json(report) << '\n';
            });
            write_file(g.resolve_out(timeline.csv_out, "timeline.csv"),
                       [&](std::ostream& out) { io::write_timeliness_csv(out, report); });
            std::cout << "periods=" << report.periods.size()
                      << " remaining=" << report.remaining << '\n';
        } else if (cmd_synth->parsed()) {
            g.write_manifest("synth");
            SynthConfig sc = g.cfg.synth;
            if (synth_cmd.users) sc.n_users = *synth_cmd.users;
            if (synth_cmd.messages) sc.n_messages = *synth_cmd.messages;
            if (synth_cmd.max_size) sc.max_cascade_size = *synth_cmd.max_size;
            if (synth_cmd.min_size) sc.min_cascade_size = *synth_cmd.min_size;
            if (synth_cmd.psm_fraction) sc.psm_fraction = *synth_cmd.psm_fraction;
            if (synth_cmd.viral_fraction) sc.viral_fraction = *synth_cmd.viral_fraction;
            if (synth_cmd.exponent) sc.size_exponent = *synth_cmd.exponent;
            if (synth_cmd.bias) sc.psm_early_bias = *synth_cmd.bias;
            if (synth_cmd.cell_size) sc.cell_size = *synth_cmd.cell_size;
            if (synth_cmd.organic) sc.organic_viral_fraction = *synth_cmd.organic;
            if (synth_cmd.span_days) sc.time_span_days = *synth_cmd.span_days;
            sc.phi = g.cfg.phi;
            if (g.seed) sc.seed = *g.seed;
            const SynthResult res = generate(sc);
            write_file(g.resolve_out(synth_cmd.out, "synth_log.csv"),
                       [&](std::ostream& out) { write_action_log_csv(out, res.log); });
            write_file(g.resolve_out(synth_cmd.labels_out, "labels.csv"),
                       [&](std::ostream& out) {
                           io::write_labels_csv(out, res.truth.labels, res.log);
                       });
            std::cout << "actions=" << res.log.size() << " users=" << res.log.user_count()
                      << " implied_theta=" << res.implied_theta << '\n';
        }
    } catch (const UsageFailure& e) {
        std::cerr << "psmdetect: usage error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "psmdetect: parse error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "psmdetect: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
