#include "psm/pipeline_config.hpp"

#include <set>

#include <json.hpp>

namespace psm {

namespace {

using nlohmann::ordered_json;

void reject_unknown(const ordered_json& obj, const std::set<std::string>& known,
                    const std::string& section) {
    for (const auto& [key, value] : obj.items())
        if (!known.contains(key))
            throw ConfigError("unknown key '" + key + "' in section '" + section + "'");
}

template <typename T>
void get_if(const ordered_json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    const ordered_json root = ordered_json::parse(text);
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(root, {"cascade", "causal", "decay", "classify", "evaluate", "synth", "run"},
                   "<top>");

    PipelineConfig c;
    if (root.contains("cascade")) {
        const auto& s = root.at("cascade");
        reject_unknown(s, {"theta", "phi"}, "cascade");
        get_if(s, "theta", c.theta);
        get_if(s, "phi", c.phi);
    }
    if (root.contains("causal")) {
        const auto& s = root.at("causal");
        reject_unknown(s, {"rho_mode", "rho", "alpha"}, "causal");
        if (s.contains("rho_mode")) {
            const auto mode = s.at("rho_mode").get<std::string>();
            if (mode == "computed")
                c.causal.rho_mode = RhoMode::computed;
            else if (mode == "fixed")
                c.causal.rho_mode = RhoMode::fixed;
            else
                throw ConfigError("rho_mode must be 'computed' or 'fixed'");
        }
        get_if(s, "rho", c.causal.rho);
        get_if(s, "alpha", c.causal.alpha);
    }
    if (root.contains("decay")) {
        const auto& s = root.at("decay");
        reject_unknown(s, {"delta_days", "sigma", "grid"}, "decay");
        if (s.contains("delta_days"))
            c.decay.delta = days(s.at("delta_days").get<double>());
        get_if(s, "sigma", c.decay.sigma_per_day);
        if (s.contains("grid")) {
            const auto grid = s.at("grid").get<std::string>();
            if (grid == "strict")
                c.decay.grid = DecayConfig::Grid::strict;
            else if (grid == "include_final")
                c.decay.grid = DecayConfig::Grid::include_final;
            else
                throw ConfigError("grid must be 'strict' or 'include_final'");
        }
    }
    if (root.contains("classify")) {
        const auto& s = root.at("classify");
        reject_unknown(s, {"k", "thresholds"}, "classify");
        get_if(s, "k", c.k);
        if (s.contains("thresholds")) {
            const auto& t = s.at("thresholds");
            reject_unknown(t, {"km", "rel", "nb", "wnb"}, "classify.thresholds");
            for (int m = 0; m < kMetricCount; ++m) {
                const char* name = metric_name(static_cast<Metric>(m));
                if (t.contains(name))
                    c.thresholds.set(static_cast<Metric>(m), t.at(name).get<double>());
            }
        }
    }
    if (root.contains("evaluate")) {
        const auto& s = root.at("evaluate");
        reject_unknown(s, {"folds", "period_days", "train_fraction"}, "evaluate");
        get_if(s, "folds", c.folds);
        if (s.contains("period_days"))
            c.period_length = days(s.at("period_days").get<double>());
        get_if(s, "train_fraction", c.train_fraction);
    }
    if (root.contains("synth")) {
        const auto& s = root.at("synth");
        reject_unknown(s,
                       {"n_users", "n_messages", "psm_fraction", "viral_fraction",
                        "size_exponent", "psm_early_bias", "phi", "cell_size",
                        "organic_viral_fraction", "orbit_size", "locality",
                        "campaign_fraction", "min_cascade_size", "max_cascade_size",
                        "time_span_days", "seed"},
                       "synth");
        get_if(s, "n_users", c.synth.n_users);
        get_if(s, "n_messages", c.synth.n_messages);
        get_if(s, "psm_fraction", c.synth.psm_fraction);
        get_if(s, "viral_fraction", c.synth.viral_fraction);
        get_if(s, "size_exponent", c.synth.size_exponent);
        get_if(s, "psm_early_bias", c.synth.psm_early_bias);
        get_if(s, "phi", c.synth.phi);
        get_if(s, "cell_size", c.synth.cell_size);
        get_if(s, "organic_viral_fraction", c.synth.organic_viral_fraction);
        get_if(s, "orbit_size", c.synth.orbit_size);
        get_if(s, "locality", c.synth.locality);
        get_if(s, "campaign_fraction", c.synth.campaign_fraction);
        get_if(s, "min_cascade_size", c.synth.min_cascade_size);
        get_if(s, "max_cascade_size", c.synth.max_cascade_size);
        get_if(s, "time_span_days", c.synth.time_span_days);
        get_if(s, "seed", c.synth.seed);
    }
    if (root.contains("run")) {
        const auto& s = root.at("run");
        reject_unknown(s, {"seed", "threads"}, "run");
        get_if(s, "seed", c.seed);
        get_if(s, "threads", c.threads);
    }
    c.validate();
    return c;
}

std::string PipelineConfig::to_json_text() const {
    ordered_json root;
    root["cascade"] = {{"theta", theta}, {"phi", phi}};
    root["causal"] = {{"rho_mode", causal.rho_mode == RhoMode::computed ? "computed" : "fixed"},
                      {"rho", causal.rho},
                      {"alpha", causal.alpha}};
    root["decay"] = {
        {"delta_days", static_cast<double>(decay.delta) / static_cast<double>(kSecondsPerDay)},
        {"sigma", decay.sigma_per_day},
        {"grid",
         decay.grid == DecayConfig::Grid::strict ? "strict" : "include_final"}};
    root["classify"] = {{"k", k},
                        {"thresholds",
                         {{"km", thresholds.get(Metric::km)},
                          {"rel", thresholds.get(Metric::rel)},
                          {"nb", thresholds.get(Metric::nb)},
                          {"wnb", thresholds.get(Metric::wnb)}}}};
    root["evaluate"] = {
        {"folds", folds},
        {"period_days", static_cast<double>(period_length) / static_cast<double>(kSecondsPerDay)},
        {"train_fraction", train_fraction}};
    root["synth"] = {{"n_users", synth.n_users},
                     {"n_messages", synth.n_messages},
                     {"psm_fraction", synth.psm_fraction},
                     {"viral_fraction", synth.viral_fraction},
                     {"size_exponent", synth.size_exponent},
                     {"psm_early_bias", synth.psm_early_bias},
                     {"phi", synth.phi},
                     {"cell_size", synth.cell_size},
                     {"organic_viral_fraction", synth.organic_viral_fraction},
                     {"orbit_size", synth.orbit_size},
                     {"locality", synth.locality},
                     {"campaign_fraction", synth.campaign_fraction},
                     {"min_cascade_size", synth.min_cascade_size},
                     {"max_cascade_size", synth.max_cascade_size},
                     {"time_span_days", synth.time_span_days},
                     {"seed", synth.seed}};
    root["run"] = {{"seed", seed}, {"threads", threads}};
    return root.dump(2);
}

void PipelineConfig::validate() const {
    if (theta < 1) throw ConfigError("theta must be >= 1");
    if (!(phi > 0.0 && phi < 1.0)) throw ConfigError("phi must be in (0,1)");
    causal.validate();
    decay.validate();
    if (k < 1) throw ConfigError("k must be >= 1");
    if (folds < 2) throw ConfigError("folds must be >= 2");
    if (period_length <= 0) throw ConfigError("period length must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must be in (0,1)");
    if (threads < 0) throw ConfigError("threads must be >= 0");
}

}  // namespace psm
