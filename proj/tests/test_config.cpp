#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "psm/io.hpp"
#include "psm/pipeline_config.hpp"

using namespace psm;
using namespace psm::test;

TEST_SUITE("config") {

TEST_CASE("defaults follow the documented constants") {
    const PipelineConfig c;
    CHECK(c.theta == 100);
    CHECK(c.phi == 0.5);
    CHECK(c.causal.rho_mode == RhoMode::fixed);
    CHECK(c.causal.rho == 0.1);
    CHECK(c.causal.alpha == 0.001);
    CHECK(c.decay.delta == days(5));
    CHECK(c.decay.sigma_per_day == 0.001);
    CHECK(c.k == 10);
    CHECK(c.thresholds.get(Metric::km) == 0.7);
    CHECK(c.thresholds.get(Metric::rel) == 7.0);
    CHECK(c.thresholds.get(Metric::wnb) == 0.7);
    CHECK(c.folds == 10);
    CHECK(c.period_length == days(10));
}

TEST_CASE("config text round-trips") {
    PipelineConfig c;
    c.theta = 3;
    c.phi = 0.4;
    c.causal.rho_mode = RhoMode::computed;
    c.decay.sigma_per_day = 0.25;
    c.decay.grid = DecayConfig::Grid::include_final;
    c.k = 7;
    c.thresholds.set(Metric::rel, 5.5);
    c.synth.n_users = 77;
    c.seed = 1234;
    const PipelineConfig back = PipelineConfig::from_json_text(c.to_json_text());
    CHECK(back.to_json_text() == c.to_json_text());
    CHECK(back.theta == 3);
    CHECK(back.causal.rho_mode == RhoMode::computed);
    CHECK(back.decay.grid == DecayConfig::Grid::include_final);
    CHECK(back.thresholds.get(Metric::rel) == 5.5);
    CHECK(back.synth.n_users == 77);
}

TEST_CASE("unknown keys are rejected") {
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"cascade":{"theta":3,"tehta":4}})"),
                    ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"mystery":{}})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"causal":{"rho_mode":"guess"}})"),
                    ConfigError);
}

TEST_CASE("invalid values fail validation") {
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"cascade":{"phi":1.5}})"),
                    ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"causal":{"alpha":0}})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"classify":{"k":0}})"), ConfigError);
}

TEST_CASE("vector csv round trips through io") {
    const ActionLog log = t1_log();
    std::vector<CausalityVector> vecs(2);
    vecs[0].user = 0;
    vecs[0].km = 0.5;
    vecs[0].rel = 1.0 / 0.501 - 1.0;
    vecs[1].user = 1;
    vecs[1].nb = 0.5;
    std::ostringstream out;
    io::write_vectors_csv(out, vecs, log, false);
    std::istringstream in(out.str());
    const auto back = io::read_vectors_csv(in, log);
    REQUIRE(back.size() == 2);
    CHECK(back[0].km == vecs[0].km);
    CHECK(back[0].rel == vecs[0].rel);  // shortest round-trip formatting is exact
    CHECK(!back[0].nb.has_value());
    CHECK(back[1].nb == vecs[1].nb);
    CHECK(back[1].defined_mask() == 0b0100);
}

TEST_CASE("labels csv round trips") {
    const ActionLog log = t1_log();
    std::vector<Label> labels{Label::psm, Label::normal, Label::normal, Label::psm};
    std::ostringstream out;
    io::write_labels_csv(out, labels, log);
    std::istringstream in(out.str());
    const auto back = io::read_labels_csv(in);
    CHECK(back.size() == 4);
    CHECK(back.at(log.user_name(0)) == Label::psm);
    CHECK(back.at(log.user_name(1)) == Label::normal);
}

TEST_CASE("prediction csv includes provenance and parses back") {
    const ActionLog log = t1_log();
    std::vector<Prediction> preds(1);
    preds[0].user = 0;
    preds[0].predicted = Label::psm;
    preds[0].score = 0.75;
    preds[0].provenance = Provenance::c2dc;
    preds[0].community = 3;
    std::ostringstream out;
    io::write_predictions_csv(out, preds, log);
    CHECK(out.str().find("c2dc(3)") != std::string::npos);
    std::istringstream in(out.str());
    const auto back = io::read_predictions_csv(in);
    REQUIRE(back.size() == 1);
    CHECK(back[0].user == log.user_name(0));
    CHECK(back[0].predicted == Label::psm);
    CHECK(back[0].score == 0.75);
}

}  // TEST_SUITE
