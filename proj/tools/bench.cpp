// Benchmark: indexed OpenMP engine vs the serial brute-force reference on
// synthetic logs, plus engine thread scaling. The reference transcribes the
// definitions with nested loops and recomputes everything per query, so its
// cost explodes combinatorially; the comparison log stays tiny on purpose.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "psm/causal.hpp"
#include "psm/decay.hpp"
#include "psm/graph.hpp"
#include "psm/reference.hpp"
#include "psm/synth.hpp"

using namespace psm;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

SynthResult make_log(std::uint32_t users, std::uint32_t messages) {
    SynthConfig cfg;
    cfg.n_users = users;
    cfg.n_messages = messages;
    cfg.min_cascade_size = 2;
    cfg.max_cascade_size = std::min<std::uint32_t>(users, users <= 1'000 ? 20 : 60);
    cfg.cell_size = std::min<std::uint32_t>(cfg.cell_size, std::max(2u, users / 20));
    cfg.orbit_size = std::min<std::uint32_t>(std::max(2u, users / 4), 50);
    cfg.seed = 42;
    return generate(cfg);
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace

int main(int argc, char** argv) {
    std::uint32_t ref_users = 40, ref_messages = 120;
    std::uint32_t big_users = 20'000, big_messages = 120'000;
    if (argc > 1 && std::string(argv[1]) == "--quick") {
        big_users = 4'000;
        big_messages = 20'000;
    }

    CausalConfig ccfg;

    {
        std::printf("== engine vs serial reference (%u users, %u messages) ==\n", ref_users,
                    ref_messages);
        const SynthResult synth = make_log(ref_users, ref_messages);
        const std::uint64_t theta = synth.implied_theta;

        auto start = Clock::now();
        const auto ref = reference::all_vectors(synth.log, theta, 0.5, ccfg);
        const double t_ref = seconds_since(start);

        start = Clock::now();
        const CausalEngine engine(synth.log, extract_cascades(synth.log, theta, 0.5), ccfg);
        const auto mine = engine.all_vectors();
        const double t_eng = seconds_since(start);

        std::size_t mismatches = 0;
        for (UserId u = 0; u < synth.log.user_count(); ++u)
            for (int k = 0; k < kMetricCount; ++k) {
                const auto a = mine[u].get(static_cast<Metric>(k));
                const auto b = ref[u].get(static_cast<Metric>(k));
                if (a.has_value() != b.has_value() ||
                    (a && std::abs(*a - *b) > 1e-12))
                    ++mismatches;
            }
        std::printf("reference: %8.3f s\nengine:    %8.3f s  (%.0fx)  mismatches=%zu\n",
                    t_ref, t_eng, t_ref / t_eng, mismatches);
        if (mismatches != 0) return 1;
    }

    {
        std::printf("\n== engine thread scaling (%u users, %u messages) ==\n", big_users,
                    big_messages);
        const SynthResult synth = make_log(big_users, big_messages);
        const std::uint64_t theta = synth.implied_theta;
        std::printf("actions: %zu, theta: %llu\n", synth.log.size(),
                    static_cast<unsigned long long>(theta));

        const int hw_threads = max_threads();
        for (int threads = 1; threads <= hw_threads; threads *= 2) {
            set_threads(threads);
            auto start = Clock::now();
            const CausalEngine engine(synth.log, extract_cascades(synth.log, theta, 0.5),
                                      ccfg);
            const auto vectors = engine.all_vectors();
            const double t_metrics = seconds_since(start);

            start = Clock::now();
            const CoPostGraph graph = build_graph(synth.log);
            const double t_graph = seconds_since(start);

            std::size_t defined = 0;
            for (const auto& v : vectors)
                if (v.defined_mask()) ++defined;
            std::printf(
                "threads=%d  metrics: %7.3f s   graph(%zu edges): %7.3f s   signal=%zu\n",
                threads, t_metrics, graph.edge_count, t_graph, defined);
        }
    }
    return 0;
}
