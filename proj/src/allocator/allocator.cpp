#include "flowdirector/allocator/allocator.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "flowdirector/errors.hpp"
#include "flowdirector/log.hpp"

namespace flowdirector::allocator {

MergeResult merge(const TopologyGraph& graph) {
    std::map<std::string, std::size_t> node_index;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        auto [it, inserted] = node_index.emplace(graph.nodes[i].first, i);
        if (!inserted) throw std::invalid_argument("duplicate site: " + graph.nodes[i].first);
    }

    // Bucket edges by unordered pair of node indices; map order gives the
    // deterministic column order.
    std::map<std::pair<std::size_t, std::size_t>, MergedEdge> buckets;
    for (const auto& edge : graph.edges) {
        auto src_it = node_index.find(edge.src);
        auto dst_it = node_index.find(edge.dst);
        if (src_it == node_index.end())
            throw UnknownSite("rule " + edge.rule_id + " references unknown site " + edge.src);
        if (dst_it == node_index.end())
            throw UnknownSite("rule " + edge.rule_id + " references unknown site " + edge.dst);
        if (src_it->second == dst_it->second)
            throw std::invalid_argument("rule " + edge.rule_id + " has src == dst");
        if (edge.priority < 1)
            throw std::invalid_argument("rule " + edge.rule_id + " has priority < 1");

        auto key = std::minmax(src_it->second, dst_it->second);
        MergedEdge& me = buckets[key];
        if (me.members.empty())
            me.site_pair = {graph.nodes[key.first].first, graph.nodes[key.second].first};
        me.merged_priority += edge.priority;
        me.members.emplace_back(edge.rule_id, edge.priority);
    }

    MergeResult out;
    out.problem.incidence.assign(graph.nodes.size(), std::vector<int>(buckets.size(), 0));
    out.problem.capacities.reserve(graph.nodes.size());
    for (const auto& [name, capacity] : graph.nodes) {
        if (capacity < 0) throw std::invalid_argument("site " + name + " has negative capacity");
        out.problem.capacities.push_back(capacity);
    }
    std::size_t col = 0;
    for (auto& [key, me] : buckets) {
        out.problem.incidence[key.first][col] = 1;
        out.problem.incidence[key.second][col] = 1;
        out.problem.priorities.push_back(me.merged_priority);
        out.merged.push_back(std::move(me));
        ++col;
    }
    return out;
}

std::int64_t max_lower_bound(const lp::AllocationProblem& problem, std::int64_t granularity) {
    if (granularity <= 0) throw std::invalid_argument("granularity must be positive");
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    bool any = false;
    for (std::size_t i = 0; i < problem.num_sites(); ++i) {
        std::int64_t degree = std::accumulate(problem.incidence[i].begin(),
                                              problem.incidence[i].end(), std::int64_t{0});
        if (degree == 0) continue;
        any = true;
        best = std::min(best, problem.capacities[i] / degree);
    }
    if (!any) return 0;
    return std::max<std::int64_t>(0, (best / granularity) * granularity);
}

std::vector<RuleAllocation> apportion(
    std::int64_t total_gbps, const std::vector<std::pair<std::string, std::int64_t>>& members,
    std::int64_t granularity) {
    if (granularity <= 0) throw std::invalid_argument("granularity must be positive");
    if (total_gbps % granularity != 0)
        throw std::invalid_argument("total must be a multiple of the granularity");
    if (members.empty()) throw std::invalid_argument("no members to apportion among");

    const std::int64_t units = total_gbps / granularity;
    std::int64_t weight_sum = 0;
    for (const auto& [id, pri] : members) {
        if (pri < 1) throw std::invalid_argument("member priority must be >= 1");
        weight_sum += pri;
    }

    // quota_i = units * p_i / sum(p); floors first, leftover units by largest
    // fractional remainder, ties to higher priority then lexicographic id.
    // Remainders share the denominator weight_sum, so integer compares are exact.
    struct Share {
        std::size_t idx;
        std::int64_t base;
        std::int64_t remainder;
    };
    std::vector<Share> shares;
    shares.reserve(members.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        std::int64_t scaled = units * members[i].second;
        shares.push_back({i, scaled / weight_sum, scaled % weight_sum});
        assigned += shares.back().base;
    }
    std::int64_t leftover = units - assigned;

    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (shares[a].remainder != shares[b].remainder)
            return shares[a].remainder > shares[b].remainder;
        if (members[a].second != members[b].second) return members[a].second > members[b].second;
        return members[a].first < members[b].first;
    });
    for (std::int64_t k = 0; k < leftover; ++k) shares[order[k]].base += 1;

    std::vector<RuleAllocation> out(members.size());
    for (const Share& s : shares)
        out[s.idx] = {members[s.idx].first, s.base * granularity};
    return out;
}

namespace {

// Same contract as apportion, but guarantees every member at least one unit
// when the total admits it: one reserved unit each, remainder apportioned.
// Only used when the global solve ran with l >= g, where a zero share would
// defeat the lower bound's purpose.
std::vector<RuleAllocation> apportion_with_floor(
    std::int64_t total_gbps, const std::vector<std::pair<std::string, std::int64_t>>& members,
    std::int64_t granularity) {
    auto plain = apportion(total_gbps, members, granularity);
    const std::int64_t units = total_gbps / granularity;
    bool starved = std::any_of(plain.begin(), plain.end(),
                               [](const RuleAllocation& a) { return a.bandwidth_gbps == 0; });
    if (!starved || units < static_cast<std::int64_t>(members.size())) return plain;

    std::int64_t rest = total_gbps - granularity * static_cast<std::int64_t>(members.size());
    if (rest == 0) {
        for (std::size_t i = 0; i < members.size(); ++i)
            plain[i] = {members[i].first, granularity};
        return plain;
    }
    auto out = apportion(rest, members, granularity);
    for (auto& a : out) a.bandwidth_gbps += granularity;
    return out;
}

}  // namespace

std::vector<RuleAllocation> allocate(
    const std::vector<model::TransferRule>& rules,
    const std::vector<std::pair<std::string, std::int64_t>>& sites, std::int64_t granularity) {
    if (rules.empty()) return {};

    TopologyGraph graph;
    graph.nodes = sites;
    for (const auto& r : rules)
        graph.edges.push_back({r.rule_id, r.src, r.dst, r.priority});

    MergeResult mr = merge(graph);
    lp::AllocationProblem problem = mr.problem;
    problem.lower_bound = max_lower_bound(problem, granularity);

    lp::AllocationSolution sol;
    for (;;) {
        try {
            sol = lp::solve(problem);
            break;
        } catch (const Infeasible&) {
            if (problem.lower_bound == 0) throw;  // cannot happen for b >= 0
            problem.lower_bound = std::max<std::int64_t>(0, problem.lower_bound - granularity);
            log::info("allocator") << "relaxing lower bound to " << problem.lower_bound;
        }
    }

    std::vector<RuleAllocation> out;
    out.reserve(rules.size());
    for (std::size_t col = 0; col < mr.merged.size(); ++col) {
        // Edge totals go to the apportionment in whole granularity units.
        std::int64_t total = (sol.x[col] / granularity) * granularity;
        auto split = problem.lower_bound >= granularity
                         ? apportion_with_floor(total, mr.merged[col].members, granularity)
                         : apportion(total, mr.merged[col].members, granularity);
        out.insert(out.end(), split.begin(), split.end());
    }

    // Back to input rule order.
    std::map<std::string, std::int64_t> by_id;
    for (const auto& a : out) by_id[a.rule_id] = a.bandwidth_gbps;
    std::vector<RuleAllocation> ordered;
    ordered.reserve(rules.size());
    for (const auto& r : rules) ordered.push_back({r.rule_id, by_id.at(r.rule_id)});
    return ordered;
}

}  // namespace flowdirector::allocator
