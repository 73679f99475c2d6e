#include <doctest.h>

#include <random>

#include "flowdirector/errors.hpp"
#include "flowdirector/lp/solver.hpp"
#include "test_util.hpp"

using namespace flowdirector;
using testutil::example_problem;
using testutil::random_problem;

TEST_CASE("worked example solves to the published optimum") {
    auto p = example_problem(65);
    auto sol = lp::solve(p);
    REQUIRE(sol.feasible);
    CHECK(sol.x == std::vector<std::int64_t>{335, 65, 65, 70});
    CHECK(sol.objective == 3275);  // 8*335 + 3*65 + 4*65 + 2*70
}

TEST_CASE("single edge saturates the pair") {
    lp::AllocationProblem p;
    p.incidence = {{1}, {1}};
    p.capacities = {100, 100};
    p.priorities = {1};
    p.lower_bound = 0;
    auto sol = lp::solve(p);
    REQUIRE(sol.feasible);
    CHECK(sol.x == std::vector<std::int64_t>{100});
}

TEST_CASE("lower bound beyond a node's capacity is infeasible") {
    // The degree-3 node with capacity 200 would need 3*70 = 210.
    auto p = example_problem(70);
    CHECK_THROWS_AS(lp::solve(p), Infeasible);
    CHECK_FALSE(lp::brute_force(p, 5).feasible);
}

TEST_CASE("empty problem is trivially optimal") {
    lp::AllocationProblem p;
    auto sol = lp::solve(p);
    REQUIRE(sol.feasible);
    CHECK(sol.x.empty());
    CHECK(sol.objective == 0);
}

TEST_CASE("grid oracle agrees with the solver on the worked example") {
    auto p = example_problem(65);
    auto bf = lp::brute_force(p, 5);
    REQUIRE(bf.feasible);
    CHECK(bf.x == std::vector<std::int64_t>{335, 65, 65, 70});
    CHECK(bf.objective == lp::solve(p).objective);
}

TEST_CASE("grid oracle on a two-edge star") {
    lp::AllocationProblem p;
    p.incidence = {{1, 1}, {1, 0}, {0, 1}};
    p.capacities = {10, 10, 10};
    p.priorities = {1, 1};
    p.lower_bound = 0;
    auto sol = lp::brute_force(p, 5);
    REQUIRE(sol.feasible);
    CHECK(sol.objective == 10);
    // ties resolve to the lexicographically largest point
    CHECK(sol.x == std::vector<std::int64_t>{10, 0});
}

TEST_CASE("grid oracle rejects intractable grids") {
    lp::AllocationProblem p;
    p.incidence = {{1}, {1}};
    p.capacities = {100000, 100000};
    p.priorities = {1};
    CHECK_THROWS_AS(lp::brute_force(p, 5), GridTooLarge);

    lp::AllocationProblem wide;
    wide.incidence.assign(4, std::vector<int>(6, 0));
    int col = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            wide.incidence[i][col] = 1;
            wide.incidence[j][col] = 1;
            ++col;
        }
    wide.capacities = {100, 100, 100, 100};
    wide.priorities = {1, 1, 1, 1, 1, 1};
    CHECK_THROWS_AS(lp::brute_force(wide, 5), GridTooLarge);
}

TEST_CASE("invariant checks reject malformed problems") {
    lp::AllocationProblem p;
    p.incidence = {{1}, {0}};  // column touches one site
    p.capacities = {10, 10};
    p.priorities = {1};
    CHECK_THROWS_AS(lp::solve(p), std::invalid_argument);

    auto bad_priority = example_problem(0);
    bad_priority.priorities[0] = 0;
    CHECK_THROWS_AS(lp::solve(bad_priority), std::invalid_argument);
}

TEST_CASE("solver output is always exactly feasible") {
    std::mt19937_64 rng(0xfeedbeef);
    for (int iter = 0; iter < 300; ++iter) {
        auto p = random_problem(rng);
        std::uniform_int_distribution<int> pick_l(0, 10);
        p.lower_bound = 5 * pick_l(rng);
        lp::AllocationSolution sol;
        try {
            sol = lp::solve(p);
        } catch (const Infeasible&) {
            continue;
        }
        REQUIRE(sol.feasible);
        for (std::size_t i = 0; i < p.num_sites(); ++i) {
            std::int64_t used = 0;
            for (std::size_t j = 0; j < p.num_edges(); ++j)
                used += p.incidence[i][j] * sol.x[j];
            CHECK(used <= p.capacities[i]);
        }
        for (std::int64_t v : sol.x) CHECK(v >= p.lower_bound);
    }
}

TEST_CASE("solver dominates the grid oracle and stays within the grid gap") {
    std::mt19937_64 rng(0x5151);
    for (int iter = 0; iter < 120; ++iter) {
        auto p = random_problem(rng);
        auto sol = lp::solve(p);  // l = 0 always feasible
        auto bf = lp::brute_force(p, 5);
        REQUIRE(sol.feasible);
        REQUIRE(bf.feasible);
        CHECK(sol.objective >= bf.objective);
        std::int64_t priority_sum = 0;
        for (std::int64_t c : p.priorities) priority_sum += c;
        CHECK(sol.objective <= bf.objective + 5 * priority_sum);
    }
}

TEST_CASE("scaling every priority leaves the solution unchanged") {
    std::mt19937_64 rng(0xabcd);
    for (int iter = 0; iter < 100; ++iter) {
        auto p = random_problem(rng);
        auto sol = lp::solve(p);
        for (std::int64_t k : {2, 7}) {
            auto scaled = p;
            for (auto& c : scaled.priorities) c *= k;
            auto sol2 = lp::solve(scaled);
            CHECK(sol2.x == sol.x);
            CHECK(sol2.objective == k * sol.objective);
        }
    }
}

TEST_CASE("objective is monotone non-increasing in the lower bound") {
    std::mt19937_64 rng(0x777);
    for (int iter = 0; iter < 200; ++iter) {
        auto p = random_problem(rng);
        std::int64_t rounding_slack = 0;
        for (std::int64_t c : p.priorities) rounding_slack += c;
        std::vector<lp::AllocationSolution> solutions;
        for (std::int64_t l : {0, 5, 10, 20}) {
            p.lower_bound = l;
            try {
                solutions.push_back(lp::solve(p));
            } catch (const Infeasible&) {
                break;  // larger l only gets worse
            }
        }
        for (std::size_t i = 1; i < solutions.size(); ++i) {
            // exact on the vertex value; flooring can cost up to sum(c)
            CHECK(solutions[i - 1].continuous_objective >=
                  solutions[i].continuous_objective - 1e-6);
            CHECK(solutions[i - 1].objective >= solutions[i].objective - rounding_slack);
        }
    }
}

TEST_CASE("identical input yields identical solutions") {
    std::mt19937_64 rng(0x2024);
    for (int iter = 0; iter < 50; ++iter) {
        auto p = random_problem(rng);
        auto a = lp::solve(p);
        auto b = lp::solve(p);
        CHECK(a.x == b.x);
        CHECK(a.objective == b.objective);
    }
}
