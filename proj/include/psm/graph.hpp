#pragma once

#include <array>
#include <span>
#include <vector>

#include "psm/action_log.hpp"
#include "psm/common.hpp"

namespace psm {

// Undirected co-posting graph: one vertex per vocabulary user, one edge per
// unordered pair of distinct users sharing at least one message attribute,
// weighted by the number of shared messages. No self-loops; adjacency is
// symmetric and sorted.
struct CoPostGraph {
    std::size_t vertex_count = 0;
    std::vector<std::uint64_t> offsets;     // CSR, size vertex_count + 1
    std::vector<UserId> neighbors;          // sorted per vertex
    std::vector<std::uint32_t> weights;     // co-post counts, parallel to neighbors
    std::size_t edge_count = 0;             // undirected edge count

    std::span<const UserId> adjacency(UserId u) const {
        if (u >= vertex_count) return {};
        return {neighbors.data() + offsets[u], neighbors.data() + offsets[u + 1]};
    }
    std::span<const std::uint32_t> adjacency_weights(UserId u) const {
        if (u >= vertex_count) return {};
        return {weights.data() + offsets[u], weights.data() + offsets[u + 1]};
    }
};

CoPostGraph build_graph(const ActionLog& log);

// Edge-list round trip (`u v weight` per line, raw user ids).
void write_graph_edges(std::ostream& out, const CoPostGraph& g, const ActionLog& log);

struct CommunityPartition {
    std::vector<std::uint32_t> assignment;  // vertex -> community id, dense 0..k-1
    std::uint32_t community_count = 0;
    double modularity = 0.0;
    std::vector<double> phase_modularity;   // per aggregation phase, non-decreasing

    std::vector<std::vector<UserId>> members() const;
};

struct LouvainOptions {
    std::uint64_t seed = 0;
    double resolution = 1.0;
    bool weighted = false;  // use co-post counts instead of unit weights
};

// Two-phase Louvain modularity optimization (local moving + aggregation).
// Deterministic given the seed: vertex visiting order is seeded, equal-gain
// moves go to the lowest community id. Empty graphs give an empty partition;
// an edgeless graph gives singletons with modularity 0.
CommunityPartition louvain(const CoPostGraph& g, const LouvainOptions& options = {});

// Modularity of an assignment on g (resolution-scaled); 0 when g has no edges.
double modularity(const CoPostGraph& g, const std::vector<std::uint32_t>& assignment,
                  double resolution = 1.0, bool weighted = false);

struct CohesionTestResult {
    std::vector<double> within;  // v_a: all within-community pair distances
    std::vector<double> cross;   // v_b: per user, distance to one seeded pick elsewhere
    double t_statistic = 0.0;
    double p_value = 1.0;
    double reject_at = 0.01;
    bool rejected = false;
};

// One-sided Welch t-test of H0 "within-community causality distances are not
// smaller than cross-community ones". Vectors are indexed by user id
// (undefined components already imputed to 0 by the caller). Partitions with
// a single community are a domain error.
CohesionTestResult cohesion_test(const CommunityPartition& partition,
                                 const std::vector<std::array<double, 4>>& vectors,
                                 std::uint64_t seed, double reject_at = 0.01);

}  // namespace psm
