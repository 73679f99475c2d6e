#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flowdirector/lp/solver.hpp"
#include "flowdirector/model/types.hpp"

namespace flowdirector::allocator {

// Transfer topology multigraph: sites as nodes, rules as edges.  Direction
// is recorded but irrelevant to the optimization.
struct TopologyGraph {
    std::vector<std::pair<std::string, std::int64_t>> nodes;  // (site, port capacity)
    struct Edge {
        std::string rule_id;
        std::string src;
        std::string dst;
        std::int64_t priority;
    };
    std::vector<Edge> edges;  // parallel edges allowed
};

struct MergedEdge {
    std::pair<std::string, std::string> site_pair;  // unordered; stored in node order
    std::int64_t merged_priority = 0;               // sum of member priorities
    std::vector<std::pair<std::string, std::int64_t>> members;  // (rule_id, priority)
};

struct RuleAllocation {
    std::string rule_id;
    std::int64_t bandwidth_gbps = 0;
};

struct MergeResult {
    std::vector<MergedEdge> merged;    // one per distinct site pair, column order
    lp::AllocationProblem problem;     // A/b/c skeleton; lower_bound left 0
};

// Collapse the multigraph to a simple graph, summing priorities of edges
// that share a site pair.  Rows follow the node list order; columns are the
// site pairs sorted by (node index, node index).
MergeResult merge(const TopologyGraph& graph);

// Largest granularity-aligned l for which x = l.1 is feasible:
// g * floor(min_n (b_n / degree(n)) / g), clamped at >= 0.
std::int64_t max_lower_bound(const lp::AllocationProblem& problem, std::int64_t granularity);

// Largest-remainder apportionment of a merged edge's bandwidth among its
// member rules, proportional to priority, in units of g.  Output order
// matches the input member order and sums exactly to total.
std::vector<RuleAllocation> apportion(
    std::int64_t total_gbps, const std::vector<std::pair<std::string, std::int64_t>>& members,
    std::int64_t granularity);

// Full pipeline: merge -> l = max_lower_bound -> solve (relaxing l by g on
// infeasibility) -> apportion each merged edge among its member rules.
// Pure function of its inputs; empty rule list yields an empty result.
std::vector<RuleAllocation> allocate(const std::vector<model::TransferRule>& rules,
                                     const std::vector<std::pair<std::string, std::int64_t>>& sites,
                                     std::int64_t granularity);

}  // namespace flowdirector::allocator
