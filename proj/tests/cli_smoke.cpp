// End-to-end CLI exercise: synth -> decay -> classify c2dc -> evaluate, plus
// config handling, exit codes and byte-identical reruns. Drives the installed
// binary via std::system.

#include <cassert>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        std::cerr << "FAIL: " << what << '\n';
        ++failures;
    }
}

int run(const std::string& args) {
    const std::string cmd = std::string(PSMDETECT_BIN) + " " + args + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return rc < 0 ? rc : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    const fs::path dir = fs::temp_directory_path() / "psmdetect_smoke";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto at = [&](const char* name) { return (dir / name).string(); };

    // Pipeline: synth -> decay vectors -> c2dc -> evaluate.
    check(run("synth --seed 42 --users 400 --messages 2500 --out " + at("log.csv") +
              " --labels-out " + at("labels.csv")) == 0,
          "synth run");
    check(run("decay --in " + at("log.csv") + " --theta 40 --alpha 0.1 --out " +
              at("xi.csv")) == 0,
          "decay run");
    // Train on half the users: every even line of the labels file.
    {
        std::ifstream in(at("labels.csv"));
        std::ofstream out(at("train.csv"));
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line))
            if (n++ % 2 == 0) out << line << '\n';
    }
    check(run("classify c2dc --vectors " + at("xi.csv") + " --labels " + at("train.csv") +
              " --in " + at("log.csv") + " --weighted --resolution 16 --k 10 --seed 42" +
              " --out " + at("pred.csv")) == 0,
          "classify c2dc run");
    check(run("evaluate --predictions " + at("pred.csv") + " --truth " + at("labels.csv") +
              " --out " + at("report.json")) == 0,
          "evaluate run");
    const std::string report = slurp(at("report.json"));
    check(report.find("\"precision\"") != std::string::npos &&
              report.find("\"f1\"") != std::string::npos &&
              report.find("\"auc\"") != std::string::npos,
          "report json has metric fields");

    // Reruns with the same seed are byte-identical.
    check(run("decay --in " + at("log.csv") + " --theta 40 --alpha 0.1 --threads 1" +
              " --out " + at("xi_1.csv")) == 0,
          "decay rerun t1");
    check(run("decay --in " + at("log.csv") + " --theta 40 --alpha 0.1 --threads 2" +
              " --out " + at("xi_2.csv")) == 0,
          "decay rerun t2");
    check(slurp(at("xi_1.csv")) == slurp(at("xi.csv")), "decay output reproducible");
    check(slurp(at("xi_2.csv")) == slurp(at("xi.csv")),
          "decay output thread-count independent");

    // Cross-validated evaluation and the timeline protocol produce reports.
    check(run("evaluate --cv --vectors " + at("xi.csv") + " --labels " + at("labels.csv") +
              " --classifier knn --in " + at("log.csv") + " --k 10 --seed 42 --out " +
              at("cv.json")) == 0,
          "evaluate --cv run");
    check(run("timeline --in " + at("log.csv") + " --labels " + at("labels.csv") +
              " --classifier knn --vectors-kind decay --grid include_final --theta 40" +
              " --alpha 0.1 --seed 42 --out " + at("tl.json") + " --table-out " +
              at("tl.csv")) == 0,
          "timeline run");
    const std::string table = slurp(at("tl.csv"));
    check(table.find("period_start,period_end,tp,fp") != std::string::npos &&
              table.find("remaining,") != std::string::npos,
          "timeline table shape");

    // Stats, graph, communities, ttest.
    check(run("stats --in " + at("log.csv") + " --theta 40 --out " + at("stats.json")) == 0,
          "stats run");
    check(slurp(at("stats.json")).find("size_histogram") != std::string::npos,
          "stats json shape");
    check(run("graph --in " + at("log.csv") + " --out " + at("edges.txt")) == 0,
          "graph run");
    check(run("communities --in " + at("log.csv") + " --seed 42 --out " + at("part.csv")) ==
              0,
          "communities run");
    check(run("ttest --in " + at("log.csv") + " --vectors " + at("xi.csv") +
              " --seed 42 --out " + at("ttest.json")) == 0,
          "ttest run");

    // Config file + flag override + validation failures.
    {
        std::ofstream cfg(at("config.json"));
        cfg << R"({"cascade":{"theta":40},"causal":{"alpha":0.1}})";
    }
    check(run("stats --config " + at("config.json") + " --in " + at("log.csv") +
              " --out " + at("stats2.json")) == 0,
          "config file accepted");
    {
        std::ofstream cfg(at("bad.json"));
        cfg << R"({"cascade":{"tehta":40}})";
    }
    check(run("stats --config " + at("bad.json") + " --in " + at("log.csv")) == 1,
          "unknown config key exits 1");
    check(run("stats --in " + at("missing.csv")) == 2, "missing input exits 2");
    check(run("nonsense-subcommand") == 2, "usage error exits 2");

    // Output directory collects a manifest.
    check(run("stats --in " + at("log.csv") + " --theta 40 --output-dir " +
              (dir / "outdir").string()) == 0,
          "output-dir run");
    check(fs::exists(dir / "outdir" / "run_manifest.json"), "run manifest written");
    check(slurp(dir / "outdir" / "run_manifest.json").find("config_hash") !=
              std::string::npos,
          "manifest has config hash");

    if (failures == 0) {
        std::printf("cli smoke: all checks passed\n");
        return 0;
    }
    std::printf("cli smoke: %d failures\n", failures);
    return 1;
}
