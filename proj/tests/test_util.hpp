#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <unistd.h>
#include <random>
#include <string>
#include <vector>

#include "flowdirector/lp/solver.hpp"
#include "flowdirector/model/types.hpp"

namespace testutil {

namespace lp = flowdirector::lp;
namespace model = flowdirector::model;

// The four-site worked example: UCSD/Caltech/FNAL/Nebraska with capacities
// 400/400/200/100 and five rules merging to c = [8, 3, 4, 2].
inline const char* kUCSD = "T2_US_UCSD";
inline const char* kCaltech = "T2_US_Caltech";
inline const char* kFNAL = "T1_US_FNAL";
inline const char* kNebraska = "T2_US_Nebraska";

inline std::vector<std::pair<std::string, std::int64_t>> example_sites() {
    return {{kUCSD, 400}, {kCaltech, 400}, {kFNAL, 200}, {kNebraska, 100}};
}

struct ExampleRule {
    const char* id;
    const char* src;
    const char* dst;
    int priority;
};

inline std::vector<ExampleRule> example_rules() {
    return {{"rule-a", kUCSD, kCaltech, 5},
            {"rule-b", kUCSD, kCaltech, 3},
            {"rule-c", kUCSD, kFNAL, 3},
            {"rule-d", kCaltech, kFNAL, 4},
            {"rule-e", kFNAL, kNebraska, 2}};
}

inline std::vector<model::TransferRule> example_transfer_rules(std::int64_t bytes_each = 0) {
    std::vector<model::TransferRule> rules;
    for (const ExampleRule& r : example_rules()) {
        model::TransferRule tr;
        tr.rule_id = r.id;
        tr.src = r.src;
        tr.dst = r.dst;
        tr.priority = r.priority;
        tr.total_bytes = bytes_each;
        rules.push_back(std::move(tr));
    }
    return rules;
}

inline lp::AllocationProblem example_problem(std::int64_t lower_bound) {
    lp::AllocationProblem p;
    p.incidence = {{1, 1, 0, 0}, {1, 0, 1, 0}, {0, 1, 1, 1}, {0, 0, 0, 1}};
    p.capacities = {400, 400, 200, 100};
    p.priorities = {8, 3, 4, 2};
    p.lower_bound = lower_bound;
    return p;
}

// Random merged-edge problems: N sites, up to E distinct pairs, capacities
// multiples of 50 in [50, 400], priorities 1..9.
inline lp::AllocationProblem random_problem(std::mt19937_64& rng, int max_sites = 4,
                                            int max_edges = 4) {
    std::uniform_int_distribution<int> site_count(2, max_sites);
    const int n = site_count(rng);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::uniform_int_distribution<int> edge_count(1, std::min<int>(max_edges, pairs.size()));
    const int e = edge_count(rng);

    lp::AllocationProblem p;
    p.incidence.assign(n, std::vector<int>(e, 0));
    std::uniform_int_distribution<int> cap(1, 8);
    for (int i = 0; i < n; ++i) p.capacities.push_back(50 * cap(rng));
    std::uniform_int_distribution<int> pri(1, 9);
    for (int j = 0; j < e; ++j) {
        p.incidence[pairs[j].first][j] = 1;
        p.incidence[pairs[j].second][j] = 1;
        p.priorities.push_back(pri(rng));
    }
    return p;
}

// Unique temp path for store files; caller cleans up.
inline std::string temp_store_path(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path();
    return (dir / ("fd-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                   std::to_string(counter++) + ".db"))
        .string();
}

struct TempFile {
    explicit TempFile(const std::string& tag) : path(temp_store_path(tag)) {}
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
        std::filesystem::remove(path + "-journal", ec);
    }
    std::string path;
};

}  // namespace testutil
