#include <doctest.h>

#include <cstdlib>
#include <map>
#include <numeric>
#include <random>

#include "flowdirector/allocator/allocator.hpp"
#include "flowdirector/errors.hpp"
#include "test_util.hpp"

using namespace flowdirector;
using namespace testutil;

namespace {

allocator::TopologyGraph example_graph() {
    allocator::TopologyGraph g;
    for (const auto& [name, cap] : example_sites()) g.nodes.emplace_back(name, cap);
    for (const ExampleRule& r : example_rules())
        g.edges.push_back({r.id, r.src, r.dst, r.priority});
    return g;
}

// Random rule sets over random site lists, for the allocator property
// suite.  Parallel rules are likely, which is the point.
struct RandomCase {
    std::vector<std::pair<std::string, std::int64_t>> sites;
    std::vector<model::TransferRule> rules;
};

RandomCase random_case(std::mt19937_64& rng) {
    RandomCase rc;
    std::uniform_int_distribution<int> nsites(2, 4);
    std::uniform_int_distribution<int> cap(1, 8);
    const int n = nsites(rng);
    for (int i = 0; i < n; ++i)
        rc.sites.emplace_back("site-" + std::to_string(i), 50 * cap(rng));
    std::uniform_int_distribution<int> nrules(1, 6);
    std::uniform_int_distribution<int> pri(1, 9);
    std::uniform_int_distribution<int> pick(0, n - 1);
    const int m = nrules(rng);
    for (int k = 0; k < m; ++k) {
        model::TransferRule r;
        r.rule_id = "r" + std::to_string(k);
        int a = pick(rng);
        int b = pick(rng);
        if (a == b) b = (b + 1) % n;
        r.src = rc.sites[a].first;
        r.dst = rc.sites[b].first;
        r.priority = pri(rng);
        rc.rules.push_back(std::move(r));
    }
    return rc;
}

}  // namespace

TEST_CASE("merge reproduces the worked-example matrices") {
    auto mr = allocator::merge(example_graph());
    CHECK(mr.problem.priorities == std::vector<std::int64_t>{8, 3, 4, 2});
    CHECK(mr.problem.capacities == std::vector<std::int64_t>{400, 400, 200, 100});
    CHECK(mr.problem.incidence ==
          std::vector<std::vector<int>>{{1, 1, 0, 0}, {1, 0, 1, 0}, {0, 1, 1, 1}, {0, 0, 0, 1}});
    REQUIRE(mr.merged.size() == 4);
    CHECK(mr.merged[0].members.size() == 2);  // the two UCSD<->Caltech rules
    CHECK(mr.merged[0].merged_priority == 8);
}

TEST_CASE("merge of a single rule keeps its priority") {
    allocator::TopologyGraph g;
    g.nodes = {{"a", 100}, {"b", 100}};
    g.edges = {{"r1", "a", "b", 7}};
    auto mr = allocator::merge(g);
    REQUIRE(mr.merged.size() == 1);
    CHECK(mr.merged[0].merged_priority == 7);
}

TEST_CASE("parallel rules sum their priorities") {
    allocator::TopologyGraph g;
    g.nodes = {{"a", 100}, {"b", 100}};
    g.edges = {{"r1", "a", "b", 2}, {"r2", "b", "a", 2}};  // direction irrelevant
    auto mr = allocator::merge(g);
    REQUIRE(mr.merged.size() == 1);
    CHECK(mr.merged[0].merged_priority == 4);
    CHECK(mr.merged[0].members.size() == 2);
}

TEST_CASE("merge rejects unknown sites and self loops") {
    allocator::TopologyGraph g;
    g.nodes = {{"a", 100}, {"b", 100}};
    g.edges = {{"r1", "a", "nowhere", 1}};
    CHECK_THROWS_AS(allocator::merge(g), UnknownSite);
    g.edges = {{"r1", "a", "a", 1}};
    CHECK_THROWS_AS(allocator::merge(g), std::invalid_argument);
}

TEST_CASE("max lower bound matches the hand computations") {
    auto mr = allocator::merge(example_graph());
    // min(400/2, 400/2, 200/3, 100/1) = 66.67 -> aligned down to 65
    CHECK(allocator::max_lower_bound(mr.problem, 5) == 65);

    lp::AllocationProblem pair;
    pair.incidence = {{1}, {1}};
    pair.capacities = {100, 100};
    pair.priorities = {1};
    CHECK(allocator::max_lower_bound(pair, 5) == 100);

    lp::AllocationProblem tight;
    tight.incidence = {{1, 1, 1}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    tight.capacities = {12, 100, 100, 100};
    tight.priorities = {1, 1, 1};
    CHECK(allocator::max_lower_bound(tight, 5) == 0);  // floor(4/5)*5
}

TEST_CASE("apportionment reproduces the published split") {
    auto split = allocator::apportion(335, {{"rule-a", 5}, {"rule-b", 3}}, 5);
    REQUIRE(split.size() == 2);
    CHECK(split[0].bandwidth_gbps == 210);
    CHECK(split[1].bandwidth_gbps == 125);
}

TEST_CASE("apportionment corner cases") {
    auto single = allocator::apportion(100, {{"only", 9}}, 5);
    CHECK(single[0].bandwidth_gbps == 100);

    auto even = allocator::apportion(100, {{"x", 1}, {"y", 1}}, 5);
    CHECK(even[0].bandwidth_gbps == 50);
    CHECK(even[1].bandwidth_gbps == 50);

    // odd unit count with equal priorities: leftover goes to the
    // lexicographically smaller rule id
    auto odd = allocator::apportion(15, {{"b", 1}, {"a", 1}}, 5);
    CHECK(odd[0].bandwidth_gbps + odd[1].bandwidth_gbps == 15);
    CHECK(odd[1].bandwidth_gbps == 10);  // "a" wins the tie

    CHECK_THROWS_AS(allocator::apportion(33, {{"x", 1}}, 5), std::invalid_argument);
}

TEST_CASE("full pipeline reproduces the worked-example allocation list") {
    auto allocations = allocator::allocate(example_transfer_rules(), example_sites(), 5);
    std::map<std::string, std::int64_t> by_id;
    for (const auto& a : allocations) by_id[a.rule_id] = a.bandwidth_gbps;
    CHECK(by_id["rule-a"] == 210);
    CHECK(by_id["rule-b"] == 125);
    CHECK(by_id["rule-c"] == 65);
    CHECK(by_id["rule-d"] == 65);
    CHECK(by_id["rule-e"] == 70);
}

TEST_CASE("single rule takes the whole pair") {
    model::TransferRule r;
    r.rule_id = "solo";
    r.src = "a";
    r.dst = "b";
    r.priority = 1;
    auto allocations = allocator::allocate({r}, {{"a", 100}, {"b", 100}}, 5);
    REQUIRE(allocations.size() == 1);
    CHECK(allocations[0].bandwidth_gbps == 100);
}

TEST_CASE("disjoint pairs are independent") {
    model::TransferRule r1, r2;
    r1.rule_id = "r1";
    r1.src = "a";
    r1.dst = "b";
    r1.priority = 1;
    r2.rule_id = "r2";
    r2.src = "c";
    r2.dst = "d";
    r2.priority = 9;
    auto allocations =
        allocator::allocate({r1, r2}, {{"a", 100}, {"b", 100}, {"c", 100}, {"d", 100}}, 5);
    CHECK(allocations[0].bandwidth_gbps == 100);
    CHECK(allocations[1].bandwidth_gbps == 100);
}

TEST_CASE("no rules yields no allocations") {
    CHECK(allocator::allocate({}, example_sites(), 5).empty());
}

TEST_CASE("allocator property suite") {
    std::mt19937_64 rng(0x90210);
    for (int iter = 0; iter < 300; ++iter) {
        RandomCase rc = random_case(rng);
        auto allocations = allocator::allocate(rc.rules, rc.sites, 5);
        REQUIRE(allocations.size() == rc.rules.size());

        // capacity per site
        std::map<std::string, std::int64_t> used;
        for (std::size_t i = 0; i < rc.rules.size(); ++i) {
            used[rc.rules[i].src] += allocations[i].bandwidth_gbps;
            used[rc.rules[i].dst] += allocations[i].bandwidth_gbps;
        }
        for (const auto& [site, cap] : rc.sites) CHECK(used[site] <= cap);

        // priority monotonicity within a pair (equal priorities may differ
        // by one quantum)
        for (std::size_t i = 0; i < rc.rules.size(); ++i)
            for (std::size_t j = 0; j < rc.rules.size(); ++j) {
                bool same_pair =
                    (rc.rules[i].src == rc.rules[j].src && rc.rules[i].dst == rc.rules[j].dst) ||
                    (rc.rules[i].src == rc.rules[j].dst && rc.rules[i].dst == rc.rules[j].src);
                if (!same_pair) continue;
                if (rc.rules[i].priority > rc.rules[j].priority)
                    CHECK(allocations[i].bandwidth_gbps >= allocations[j].bandwidth_gbps);
                if (rc.rules[i].priority == rc.rules[j].priority)
                    CHECK(std::abs(allocations[i].bandwidth_gbps -
                                   allocations[j].bandwidth_gbps) <= 5);
            }

        // determinism
        auto again = allocator::allocate(rc.rules, rc.sites, 5);
        for (std::size_t i = 0; i < allocations.size(); ++i)
            CHECK(again[i].bandwidth_gbps == allocations[i].bandwidth_gbps);

        // priority scaling leaves the result unchanged
        auto scaled_rules = rc.rules;
        for (auto& r : scaled_rules) r.priority *= 3;
        auto scaled = allocator::allocate(scaled_rules, rc.sites, 5);
        for (std::size_t i = 0; i < allocations.size(); ++i)
            CHECK(scaled[i].bandwidth_gbps == allocations[i].bandwidth_gbps);
    }
}

TEST_CASE("merge conservation: merged priorities sum to rule priorities") {
    std::mt19937_64 rng(0x31337);
    for (int iter = 0; iter < 100; ++iter) {
        RandomCase rc = random_case(rng);
        allocator::TopologyGraph g;
        g.nodes = rc.sites;
        std::int64_t rule_sum = 0;
        for (const auto& r : rc.rules) {
            g.edges.push_back({r.rule_id, r.src, r.dst, r.priority});
            rule_sum += r.priority;
        }
        auto mr = allocator::merge(g);
        std::int64_t merged_sum = 0;
        for (const auto& me : mr.merged) merged_sum += me.merged_priority;
        CHECK(merged_sum == rule_sum);
    }
}

TEST_CASE("conservation: member allocations sum to the edge total") {
    std::mt19937_64 rng(0xc0ffee);
    for (int iter = 0; iter < 200; ++iter) {
        std::uniform_int_distribution<int> units(1, 80);
        std::uniform_int_distribution<int> nmembers(1, 5);
        std::uniform_int_distribution<int> pri(1, 9);
        const std::int64_t total = 5 * units(rng);
        std::vector<std::pair<std::string, std::int64_t>> members;
        const int m = nmembers(rng);
        for (int k = 0; k < m; ++k) members.emplace_back("m" + std::to_string(k), pri(rng));
        auto split = allocator::apportion(total, members, 5);
        std::int64_t sum = 0;
        for (const auto& a : split) {
            CHECK(a.bandwidth_gbps % 5 == 0);
            sum += a.bandwidth_gbps;
        }
        CHECK(sum == total);
    }
}
