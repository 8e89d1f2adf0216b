#include "psm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "psm/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace psm {

CoPostGraph build_graph(const ActionLog& log) {
    CoPostGraph g;
    g.vertex_count = log.user_count();

    std::vector<std::uint64_t> pairs;
#ifdef _OPENMP
#pragma omp parallel
    {
        std::vector<std::uint64_t> local;
        std::vector<UserId> users;
#pragma omp for schedule(dynamic, 64) nowait
        for (std::int64_t m = 0; m < static_cast<std::int64_t>(log.message_count()); ++m) {
            users.clear();
            for (const Action& a : log.message_actions(static_cast<MessageId>(m)))
                users.push_back(a.user);
            std::sort(users.begin(), users.end());
            users.erase(std::unique(users.begin(), users.end()), users.end());
            for (std::size_t x = 0; x < users.size(); ++x)
                for (std::size_t y = x + 1; y < users.size(); ++y)
                    local.push_back((static_cast<std::uint64_t>(users[x]) << 32) | users[y]);
        }
#pragma omp critical
        pairs.insert(pairs.end(), local.begin(), local.end());
    }
#else
    {
        std::vector<UserId> users;
        for (MessageId m = 0; m < log.message_count(); ++m) {
            users.clear();
            for (const Action& a : log.message_actions(m)) users.push_back(a.user);
            std::sort(users.begin(), users.end());
            users.erase(std::unique(users.begin(), users.end()), users.end());
            for (std::size_t x = 0; x < users.size(); ++x)
                for (std::size_t y = x + 1; y < users.size(); ++y)
                    pairs.push_back((static_cast<std::uint64_t>(users[x]) << 32) | users[y]);
        }
    }
#endif
    std::sort(pairs.begin(), pairs.end());

    // Run-length encode into unique edges with co-post counts.
    std::vector<std::uint64_t> edges;
    std::vector<std::uint32_t> counts;
    for (std::size_t i = 0; i < pairs.size();) {
        std::size_t j = i;
        while (j < pairs.size() && pairs[j] == pairs[i]) ++j;
        edges.push_back(pairs[i]);
        counts.push_back(static_cast<std::uint32_t>(j - i));
        i = j;
    }
    g.edge_count = edges.size();

    g.offsets.assign(g.vertex_count + 1, 0);
    for (std::uint64_t e : edges) {
        ++g.offsets[(e >> 32) + 1];
        ++g.offsets[(e & 0xffffffffu) + 1];
    }
    for (std::size_t v = 0; v < g.vertex_count; ++v) g.offsets[v + 1] += g.offsets[v];
    g.neighbors.resize(2 * edges.size());
    g.weights.resize(2 * edges.size());
    std::vector<std::uint64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto a = static_cast<UserId>(edges[i] >> 32);
        const auto b = static_cast<UserId>(edges[i] & 0xffffffffu);
        g.neighbors[cursor[a]] = b;
        g.weights[cursor[a]++] = counts[i];
        g.neighbors[cursor[b]] = a;
        g.weights[cursor[b]++] = counts[i];
    }
    // Per-vertex lists come out sorted because edges were sorted by (a, b)
    // and b-side insertions happen in increasing a order.
    return g;
}

void write_graph_edges(std::ostream& out, const CoPostGraph& g, const ActionLog& log) {
    for (UserId u = 0; u < g.vertex_count; ++u) {
        const auto adj = g.adjacency(u);
        const auto w = g.adjacency_weights(u);
        for (std::size_t i = 0; i < adj.size(); ++i)
            if (u < adj[i])
                out << log.user_name(u) << ' ' << log.user_name(adj[i]) << ' ' << w[i]
                    << '\n';
    }
}

std::vector<std::vector<UserId>> CommunityPartition::members() const {
    std::vector<std::vector<UserId>> out(community_count);
    for (UserId u = 0; u < assignment.size(); ++u) out[assignment[u]].push_back(u);
    return out;
}

double modularity(const CoPostGraph& g, const std::vector<std::uint32_t>& assignment,
                  double resolution, bool weighted) {
    if (g.vertex_count == 0) return 0.0;
    double m = 0.0;
    std::vector<double> degree(g.vertex_count, 0.0);
    for (UserId u = 0; u < g.vertex_count; ++u) {
        const auto adj = g.adjacency(u);
        const auto w = g.adjacency_weights(u);
        for (std::size_t i = 0; i < adj.size(); ++i) {
            const double ew = weighted ? static_cast<double>(w[i]) : 1.0;
            degree[u] += ew;
            if (u < adj[i]) m += ew;
        }
    }
    if (m == 0.0) return 0.0;

    const std::uint32_t k = assignment.empty()
                                ? 0
                                : *std::max_element(assignment.begin(), assignment.end()) + 1;
    std::vector<double> internal(k, 0.0), total(k, 0.0);
    for (UserId u = 0; u < g.vertex_count; ++u) {
        total[assignment[u]] += degree[u];
        const auto adj = g.adjacency(u);
        const auto w = g.adjacency_weights(u);
        for (std::size_t i = 0; i < adj.size(); ++i)
            if (u < adj[i] && assignment[u] == assignment[adj[i]])
                internal[assignment[u]] += weighted ? static_cast<double>(w[i]) : 1.0;
    }
    double q = 0.0;
    for (std::uint32_t c = 0; c < k; ++c) {
        const double frac = total[c] / (2.0 * m);
        q += internal[c] / m - resolution * frac * frac;
    }
    return q;
}

namespace {

// Aggregated working graph for the Louvain phases; self-loop weight kept per
// node, everything in doubles.
struct LevelGraph {
    std::size_t n = 0;
    std::vector<std::uint64_t> offsets;
    std::vector<std::uint32_t> neigh;
    std::vector<double> weight;
    std::vector<double> self_loop;
    double total_weight = 0.0;  // m: undirected edges + self-loops
};

LevelGraph level_from(const CoPostGraph& g, bool weighted) {
    LevelGraph lg;
    lg.n = g.vertex_count;
    lg.offsets.assign(g.offsets.begin(), g.offsets.end());
    lg.neigh.assign(g.neighbors.begin(), g.neighbors.end());
    lg.weight.resize(g.weights.size());
    for (std::size_t i = 0; i < g.weights.size(); ++i)
        lg.weight[i] = weighted ? static_cast<double>(g.weights[i]) : 1.0;
    lg.self_loop.assign(lg.n, 0.0);
    double sum = 0.0;
    for (double w : lg.weight) sum += w;
    lg.total_weight = sum / 2.0;
    return lg;
}

// One local-moving phase. Moves strictly improve modularity; among equally
// best improving targets the lowest community id wins. Returns whether any
// node changed community.
bool one_level(const LevelGraph& lg, std::vector<std::uint32_t>& comm, std::mt19937_64& rng,
               double resolution) {
    const std::size_t n = lg.n;
    const double m = lg.total_weight;
    if (m <= 0.0) return false;

    std::vector<double> k(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::uint64_t i = lg.offsets[u]; i < lg.offsets[u + 1]; ++i)
            k[u] += lg.weight[i];
        k[u] += 2.0 * lg.self_loop[u];
    }
    std::vector<double> sigma_tot(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) sigma_tot[comm[u]] += k[u];

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng() % i]);

    // Epoch-stamped scratch for neighbor-community weights.
    std::vector<double> neigh_w(n, 0.0);
    std::vector<std::uint32_t> stamp(n, 0);
    std::vector<std::uint32_t> touched;
    std::uint32_t epoch = 0;

    bool any_move = false;
    bool moved = true;
    int guard = 0;
    while (moved && guard++ < 128) {
        moved = false;
        for (std::uint32_t u : order) {
            const std::uint32_t cu = comm[u];
            ++epoch;
            touched.clear();
            for (std::uint64_t i = lg.offsets[u]; i < lg.offsets[u + 1]; ++i) {
                const std::uint32_t v = lg.neigh[i];
                if (v == u) continue;
                const std::uint32_t c = comm[v];
                if (stamp[c] != epoch) {
                    stamp[c] = epoch;
                    neigh_w[c] = 0.0;
                    touched.push_back(c);
                }
                neigh_w[c] += lg.weight[i];
            }
            sigma_tot[cu] -= k[u];
            const double w_cu = stamp[cu] == epoch ? neigh_w[cu] : 0.0;
            const double stay_gain =
                w_cu / m - resolution * sigma_tot[cu] * k[u] / (2.0 * m * m);
            std::uint32_t best_c = cu;
            double best_gain = stay_gain;
            for (std::uint32_t c : touched) {
                if (c == cu) continue;
                const double gain =
                    neigh_w[c] / m - resolution * sigma_tot[c] * k[u] / (2.0 * m * m);
                if (gain > best_gain || (gain == best_gain && best_c != cu && c < best_c)) {
                    best_gain = gain;
                    best_c = c;
                }
            }
            sigma_tot[best_c] += k[u];
            if (best_c != cu) {
                comm[u] = best_c;
                moved = true;
                any_move = true;
            }
        }
    }
    return any_move;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<std::uint32_t>& comm,
                     std::vector<std::uint32_t>& renumber) {
    renumber.assign(lg.n, 0);
    std::vector<bool> seen(lg.n, false);
    std::uint32_t next = 0;
    for (std::size_t u = 0; u < lg.n; ++u)
        if (!seen[comm[u]]) {
            seen[comm[u]] = true;
            renumber[comm[u]] = next++;
        }

    LevelGraph out;
    out.n = next;
    out.self_loop.assign(next, 0.0);
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(next);
    for (std::size_t u = 0; u < lg.n; ++u) {
        const std::uint32_t cu = renumber[comm[u]];
        out.self_loop[cu] += lg.self_loop[u];
        for (std::uint64_t i = lg.offsets[u]; i < lg.offsets[u + 1]; ++i) {
            const std::uint32_t cv = renumber[comm[lg.neigh[i]]];
            if (cv == cu) {
                // Each internal edge is visited from both endpoints.
                out.self_loop[cu] += lg.weight[i] / 2.0;
            } else {
                adj[cu].emplace_back(cv, lg.weight[i]);
            }
        }
    }
    out.offsets.assign(next + 1, 0);
    for (std::uint32_t c = 0; c < next; ++c) {
        auto& row = adj[c];
        std::sort(row.begin(), row.end());
        std::size_t kept = 0;
        for (std::size_t i = 0; i < row.size();) {
            std::size_t j = i;
            double w = 0.0;
            while (j < row.size() && row[j].first == row[i].first) w += row[j++].second;
            row[kept++] = {row[i].first, w};
            i = j;
        }
        row.resize(kept);
        out.offsets[c + 1] = out.offsets[c] + kept;
    }
    out.neigh.resize(out.offsets[next]);
    out.weight.resize(out.offsets[next]);
    for (std::uint32_t c = 0; c < next; ++c) {
        std::size_t pos = out.offsets[c];
        for (const auto& [v, w] : adj[c]) {
            out.neigh[pos] = v;
            out.weight[pos++] = w;
        }
    }
    double sum = 0.0;
    for (double w : out.weight) sum += w;
    out.total_weight = sum / 2.0;
    for (double s : out.self_loop) out.total_weight += s;
    return out;
}

}  // namespace

CommunityPartition louvain(const CoPostGraph& g, const LouvainOptions& options) {
    CommunityPartition part;
    const std::size_t n = g.vertex_count;
    if (n == 0) return part;

    std::mt19937_64 rng(options.seed);
    LevelGraph level = level_from(g, options.weighted);

    std::vector<std::uint32_t> flat(n);
    std::iota(flat.begin(), flat.end(), 0);  // original vertex -> supernode

    while (true) {
        std::vector<std::uint32_t> comm(level.n);
        std::iota(comm.begin(), comm.end(), 0);
        const bool improved = one_level(level, comm, rng, options.resolution);

        std::vector<std::uint32_t> renumber;
        level = aggregate(level, comm, renumber);
        for (std::size_t v = 0; v < n; ++v) flat[v] = renumber[comm[flat[v]]];

        part.phase_modularity.push_back(
            modularity(g, flat, options.resolution, options.weighted));
        if (!improved) break;
    }

    // Dense community ids in order of first appearance by vertex id.
    std::vector<std::int64_t> remap(level.n, -1);
    std::uint32_t next = 0;
    part.assignment.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        if (remap[flat[v]] < 0) remap[flat[v]] = next++;
        part.assignment[v] = static_cast<std::uint32_t>(remap[flat[v]]);
    }
    part.community_count = next;
    part.modularity = part.phase_modularity.back();
    return part;
}

CohesionTestResult cohesion_test(const CommunityPartition& partition,
                                 const std::vector<std::array<double, 4>>& vectors,
                                 std::uint64_t seed, double reject_at) {
    const std::size_t n = partition.assignment.size();
    if (vectors.size() != n) throw DomainError("cohesion_test: vector/partition size mismatch");
    if (partition.community_count < 2)
        throw DomainError("cohesion_test: undefined for a single-community partition");

    auto dist = [&](UserId a, UserId b) {
        double s = 0.0;
        for (int d = 0; d < 4; ++d) {
            const double diff = vectors[a][d] - vectors[b][d];
            s += diff * diff;
        }
        return std::sqrt(s);
    };

    CohesionTestResult res;
    res.reject_at = reject_at;

    const auto groups = partition.members();
    for (const auto& g : groups)
        for (std::size_t x = 0; x < g.size(); ++x)
            for (std::size_t y = x + 1; y < g.size(); ++y)
                res.within.push_back(dist(g[x], g[y]));
    if (res.within.size() < 2)
        throw DomainError("cohesion_test: within-community sample too small");

    // Users laid out contiguously by community for O(1) cross picks.
    std::vector<UserId> by_comm;
    by_comm.reserve(n);
    std::vector<std::size_t> block_start(groups.size() + 1, 0);
    for (std::size_t c = 0; c < groups.size(); ++c) {
        block_start[c] = by_comm.size();
        by_comm.insert(by_comm.end(), groups[c].begin(), groups[c].end());
    }
    block_start[groups.size()] = by_comm.size();

    std::mt19937_64 rng(seed);
    for (UserId u = 0; u < n; ++u) {
        const std::uint32_t c = partition.assignment[u];
        const std::size_t lo = block_start[c];
        const std::size_t size_c = block_start[c + 1] - lo;
        const std::size_t others = n - size_c;
        std::size_t pick = rng() % others;
        if (pick >= lo) pick += size_c;
        res.cross.push_back(dist(u, by_comm[pick]));
    }

    const WelchResult w = welch_one_sided_less(res.within, res.cross);
    res.t_statistic = w.t;
    res.p_value = w.p_value;
    res.rejected = res.p_value < reject_at;
    return res;
}

}  // namespace psm
