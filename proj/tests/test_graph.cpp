#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "helpers.hpp"
#include "psm/graph.hpp"
#include "psm/stats.hpp"

using namespace psm;
using namespace psm::test;

namespace {

// Direct CSR construction for hand-built topologies.
CoPostGraph graph_from_edges(std::size_t n,
                             const std::vector<std::pair<UserId, UserId>>& edges) {
    CoPostGraph g;
    g.vertex_count = n;
    g.edge_count = edges.size();
    g.offsets.assign(n + 1, 0);
    for (const auto& [a, b] : edges) {
        ++g.offsets[a + 1];
        ++g.offsets[b + 1];
    }
    for (std::size_t v = 0; v < n; ++v) g.offsets[v + 1] += g.offsets[v];
    g.neighbors.resize(2 * edges.size());
    g.weights.assign(2 * edges.size(), 1);
    std::vector<std::uint64_t> cur(g.offsets.begin(), g.offsets.end() - 1);
    for (const auto& [a, b] : edges) {
        g.neighbors[cur[a]++] = b;
        g.neighbors[cur[b]++] = a;
    }
    return g;
}

std::vector<std::pair<UserId, UserId>> clique_edges(UserId base, int size) {
    std::vector<std::pair<UserId, UserId>> out;
    for (int a = 0; a < size; ++a)
        for (int b = a + 1; b < size; ++b)
            out.emplace_back(base + a, base + b);
    return out;
}

double t_density(double x, double df) {
    return std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
           std::sqrt(df * std::acos(-1.0)) *
           std::pow(1.0 + x * x / df, -(df + 1.0) / 2.0);
}

// Quadrature oracle for the t CDF: 0.5 + Simpson integral of the density.
double t_cdf_by_quadrature(double t, double df) {
    const int steps = 20'000;
    const double lo = 0.0, hi = std::fabs(t);
    const double h = (hi - lo) / steps;
    double acc = t_density(lo, df) + t_density(hi, df);
    for (int i = 1; i < steps; ++i)
        acc += t_density(lo + h * i, df) * (i % 2 == 1 ? 4.0 : 2.0);
    const double integral = acc * h / 3.0;
    return t < 0 ? 0.5 - integral : 0.5 + integral;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("t1 co-posting graph is complete with weight(j,k)=4") {
    const ActionLog log = t1_log();
    const CoPostGraph g = build_graph(log);
    CHECK(g.vertex_count == 4);
    CHECK(g.edge_count == 6);
    const UserId j = log.find_user("j").value();
    const UserId k = log.find_user("k").value();
    const auto adj = g.adjacency(j);
    const auto w = g.adjacency_weights(j);
    bool found = false;
    for (std::size_t idx = 0; idx < adj.size(); ++idx)
        if (adj[idx] == k) {
            found = true;
            CHECK(w[idx] == 4);  // m1, m2, m3, m4
        }
    CHECK(found);
}

TEST_CASE("disjoint per-user messages give an edgeless graph") {
    std::istringstream in("a,m1,1\nb,m2,1\nc,m3,1\n");
    const CoPostGraph g = build_graph(parse_action_log(in, LogFormat::csv));
    CHECK(g.edge_count == 0);
}

TEST_CASE("a single n-participant message gives K_n") {
    std::istringstream in("a,m,1\nb,m,2\nc,m,3\nd,m,4\ne,m,5\n");
    const CoPostGraph g = build_graph(parse_action_log(in, LogFormat::csv));
    CHECK(g.vertex_count == 5);
    CHECK(g.edge_count == 10);
}

TEST_CASE("property: adjacency is symmetric with no self-loops") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const ActionLog log = random_log(seed);
        const CoPostGraph g = build_graph(log);
        for (UserId u = 0; u < g.vertex_count; ++u) {
            for (UserId v : g.adjacency(u)) {
                CHECK(v != u);
                const auto back = g.adjacency(v);
                CHECK(std::find(back.begin(), back.end(), u) != back.end());
            }
        }
    }
}

TEST_CASE("louvain: edgeless graph keeps singletons at modularity 0") {
    const CoPostGraph g = graph_from_edges(6, {});
    const CommunityPartition p = louvain(g, {.seed = 1});
    CHECK(p.community_count == 6);
    CHECK(p.modularity == 0.0);
    for (UserId u = 0; u < 6; ++u) CHECK(p.assignment[u] == u);
}

TEST_CASE("louvain: empty graph gives an empty partition") {
    const CommunityPartition p = louvain(graph_from_edges(0, {}), {.seed = 1});
    CHECK(p.community_count == 0);
    CHECK(p.assignment.empty());
}

TEST_CASE("louvain: two 4-cliques joined by one edge split at the bridge") {
    auto edges = clique_edges(0, 4);
    const auto right = clique_edges(4, 4);
    edges.insert(edges.end(), right.begin(), right.end());
    edges.emplace_back(0, 4);  // bridge
    const CoPostGraph g = graph_from_edges(8, edges);
    const CommunityPartition p = louvain(g, {.seed = 7});
    CHECK(p.community_count == 2);
    for (UserId u = 1; u < 4; ++u) CHECK(p.assignment[u] == p.assignment[0]);
    for (UserId u = 5; u < 8; ++u) CHECK(p.assignment[u] == p.assignment[4]);
    CHECK(p.assignment[0] != p.assignment[4]);
    // Exhaustive search over 8-vertex partitions puts the optimum at 0.4231.
    CHECK(p.modularity == doctest::Approx(0.4286).epsilon(0.025));
}

TEST_CASE("louvain: complete graph collapses to one community") {
    const CoPostGraph g = graph_from_edges(5, clique_edges(0, 5));
    const CommunityPartition p = louvain(g, {.seed = 3});
    CHECK(p.community_count == 1);
    CHECK(p.modularity == doctest::Approx(0.0));
}

TEST_CASE("property: same seed reproduces the partition, phases never lose Q") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const ActionLog log = random_log(seed, {.max_users = 8, .max_messages = 15,
                                                .max_actions = 40, .max_time = 50});
        const CoPostGraph g = build_graph(log);
        const CommunityPartition a = louvain(g, {.seed = seed});
        const CommunityPartition b = louvain(g, {.seed = seed});
        CHECK(a.assignment == b.assignment);
        CHECK(a.modularity == b.modularity);
        for (std::size_t i = 1; i < a.phase_modularity.size(); ++i)
            CHECK(a.phase_modularity[i] >= a.phase_modularity[i - 1] - 1e-12);
        CHECK(a.modularity >= -0.5);
        CHECK(a.modularity <= 1.0);
        // Dense community ids.
        if (!a.assignment.empty()) {
            const auto max_id = *std::max_element(a.assignment.begin(), a.assignment.end());
            CHECK(max_id + 1 == a.community_count);
        }
    }
}

TEST_CASE("modularity agrees with the hand formula on the bridge graph") {
    auto edges = clique_edges(0, 4);
    const auto right = clique_edges(4, 4);
    edges.insert(edges.end(), right.begin(), right.end());
    edges.emplace_back(0, 4);
    const CoPostGraph g = graph_from_edges(8, edges);
    std::vector<std::uint32_t> split{0, 0, 0, 0, 1, 1, 1, 1};
    // m=13, per clique: 6/13 - (13/26)^2.
    CHECK(modularity(g, split) == doctest::Approx(2.0 * (6.0 / 13.0 - 0.25)).epsilon(1e-12));
}

TEST_CASE("student t cdf matches closed forms and quadrature") {
    // df=1 is Cauchy; df=2 has an elementary closed form.
    for (double t : {-3.0, -1.0, -0.2, 0.0, 0.7, 2.5}) {
        CHECK(student_t_cdf(t, 1.0) ==
              doctest::Approx(0.5 + std::atan(t) / std::acos(-1.0)).epsilon(1e-10));
        CHECK(student_t_cdf(t, 2.0) ==
              doctest::Approx(0.5 + t / (2.0 * std::sqrt(2.0 + t * t))).epsilon(1e-10));
        for (double df : {5.0, 12.5, 100.0})
            CHECK(student_t_cdf(t, df) ==
                  doctest::Approx(t_cdf_by_quadrature(t, df)).epsilon(1e-8));
    }
    CHECK(student_t_cdf(0.0, 7.0) == 0.5);
}

TEST_CASE("welch test on a frozen known case") {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{3, 4, 5, 6};
    const WelchResult r = welch_one_sided_less(x, y);
    CHECK(r.t == doctest::Approx(-2.19089023002).epsilon(1e-9));
    CHECK(r.df == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(t_cdf_by_quadrature(r.t, 6.0)).epsilon(1e-8));
}

TEST_CASE("cohesion: identical vectors give t=0, p=0.5") {
    CommunityPartition part;
    part.assignment = {0, 0, 0, 1, 1, 1};
    part.community_count = 2;
    const std::vector<std::array<double, 4>> vecs(6, {0.3, 0.1, 0.2, 0.4});
    const CohesionTestResult r = cohesion_test(part, vecs, 42);
    CHECK(r.t_statistic == 0.0);
    CHECK(r.p_value == 0.5);
    CHECK(!r.rejected);
}

TEST_CASE("cohesion: tight clusters far apart reject H0") {
    CommunityPartition part;
    part.assignment = {0, 0, 0, 0, 1, 1, 1, 1};
    part.community_count = 2;
    std::vector<std::array<double, 4>> vecs;
    for (int i = 0; i < 4; ++i) vecs.push_back({0.0, 0.0, 0.0, 0.0});
    for (int i = 0; i < 4; ++i) vecs.push_back({5.0, 5.0, 5.0, 5.0});
    const CohesionTestResult r = cohesion_test(part, vecs, 42);
    CHECK(r.p_value < 1e-6);
    CHECK(r.rejected);
}

TEST_CASE("cohesion sample sizes follow the partition identities") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const ActionLog log = random_log(seed);
        const CoPostGraph g = build_graph(log);
        const CommunityPartition part = louvain(g, {.seed = seed});
        if (part.community_count < 2) continue;
        std::vector<std::array<double, 4>> vecs;
        std::mt19937_64 rng(seed);
        for (std::size_t u = 0; u < log.user_count(); ++u)
            vecs.push_back({static_cast<double>(rng() % 100) / 100.0,
                            static_cast<double>(rng() % 100) / 100.0,
                            static_cast<double>(rng() % 100) / 100.0,
                            static_cast<double>(rng() % 100) / 100.0});
        std::size_t expected_within = 0;
        for (const auto& group : part.members())
            expected_within += group.size() * (group.size() - 1) / 2;
        if (expected_within < 2) continue;
        const CohesionTestResult r = cohesion_test(part, vecs, seed);
        CHECK(r.within.size() == expected_within);
        CHECK(r.cross.size() == log.user_count());
    }
}

TEST_CASE("cohesion on a single-community partition is undefined") {
    CommunityPartition part;
    part.assignment = {0, 0, 0};
    part.community_count = 1;
    const std::vector<std::array<double, 4>> vecs(3, {0.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(cohesion_test(part, vecs, 1), DomainError);
}

TEST_CASE("edge list export is stable") {
    const ActionLog log = t1_log();
    const CoPostGraph g = build_graph(log);
    std::ostringstream a, b;
    write_graph_edges(a, g, log);
    write_graph_edges(b, g, log);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("j k 4") != std::string::npos);
}

}  // TEST_SUITE
