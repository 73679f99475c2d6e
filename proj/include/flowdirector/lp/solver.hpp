#pragma once

#include <cstdint>
#include <vector>

namespace flowdirector::lp {

// Bounded allocation LP: maximize c.x subject to A.x <= b, x >= l.
// A is a site/edge incidence matrix: one row per site, one column per
// merged edge, exactly two 1-entries per column.  All quantities in Gbps.
struct AllocationProblem {
    std::vector<std::vector<int>> incidence;  // N rows x E columns, 0/1
    std::vector<std::int64_t> capacities;     // length N
    std::vector<std::int64_t> priorities;     // length E, >= 1
    std::int64_t lower_bound = 0;             // scalar l >= 0

    std::size_t num_sites() const { return incidence.size(); }
    std::size_t num_edges() const { return incidence.empty() ? 0 : incidence[0].size(); }

    void validate() const;  // throws std::invalid_argument on broken invariants
};

struct AllocationSolution {
    std::vector<std::int64_t> x;  // length E, integer Gbps
    std::int64_t objective = 0;   // c.x
    // Objective at the simplex vertex before integer rounding.  Rounding
    // can cost up to sum(c) against this; the continuous value is the one
    // that is exactly monotone in the lower bound.
    double continuous_objective = 0.0;
    bool feasible = false;
};

// Deterministic dense simplex (Bland's rule) on the shifted problem
// y = x - l, then floor to integer Gbps and greedily re-add leftover slack
// to edges in descending priority order.  Identical input produces an
// identical solution.  Throws Infeasible when b - A.(l.1) has a negative
// component (the caller relaxes l).
AllocationSolution solve(const AllocationProblem& problem);

// Exhaustive grid oracle: enumerates x on {l, l+step, ...} per component
// and returns the feasible point with maximum c.x, ties resolved to the
// lexicographically largest x.  Kept independent of solve() on purpose.
// Throws GridTooLarge when the grid is intractable.
AllocationSolution brute_force(const AllocationProblem& problem, std::int64_t step);

}  // namespace flowdirector::lp
