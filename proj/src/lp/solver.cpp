#include "flowdirector/lp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "flowdirector/errors.hpp"

namespace flowdirector::lp {

namespace {

constexpr double kTol = 1e-9;

// Column upper bound implied by the incidence structure: an edge cannot
// carry more than the capacity of either endpoint site.
std::int64_t column_cap(const AllocationProblem& p, std::size_t j) {
    std::int64_t cap = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 0; i < p.num_sites(); ++i)
        if (p.incidence[i][j] != 0) cap = std::min(cap, p.capacities[i]);
    return cap;
}

std::int64_t dot(const std::vector<std::int64_t>& c, const std::vector<std::int64_t>& x) {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * x[j];
    return s;
}

}  // namespace

void AllocationProblem::validate() const {
    const std::size_t n = num_sites();
    const std::size_t e = num_edges();
    if (capacities.size() != n) throw std::invalid_argument("capacities/incidence row mismatch");
    if (priorities.size() != e) throw std::invalid_argument("priorities/incidence column mismatch");
    if (lower_bound < 0) throw std::invalid_argument("lower bound must be >= 0");
    for (std::size_t i = 0; i < n; ++i) {
        if (incidence[i].size() != e) throw std::invalid_argument("ragged incidence matrix");
        if (capacities[i] < 0) throw std::invalid_argument("negative capacity");
    }
    for (std::size_t j = 0; j < e; ++j) {
        if (priorities[j] < 1) throw std::invalid_argument("priority must be >= 1");
        int ones = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (incidence[i][j] != 0 && incidence[i][j] != 1)
                throw std::invalid_argument("incidence entries must be 0/1");
            ones += incidence[i][j];
        }
        if (ones != 2) throw std::invalid_argument("each edge must touch exactly two sites");
    }
}

AllocationSolution solve(const AllocationProblem& p) {
    p.validate();

    const std::size_t m = p.num_sites();
    const std::size_t e = p.num_edges();
    const std::int64_t l = p.lower_bound;

    AllocationSolution sol;
    if (e == 0) {
        sol.feasible = true;
        return sol;
    }

    // Shift to y = x - l.  Since A is non-negative, the shifted region is
    // non-empty exactly when the slack basis y = 0 is feasible.
    std::vector<std::int64_t> shifted_b(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::int64_t degree = std::accumulate(p.incidence[i].begin(), p.incidence[i].end(),
                                              std::int64_t{0});
        shifted_b[i] = p.capacities[i] - l * degree;
        if (shifted_b[i] < 0)
            throw Infeasible("lower bound " + std::to_string(l) + " exceeds capacity at row " +
                             std::to_string(i));
    }

    // Tableau over [edge vars | slack vars | rhs]; slack basis start.
    const std::size_t cols = e + m + 1;
    std::vector<std::vector<double>> t(m, std::vector<double>(cols, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < e; ++j) t[i][j] = static_cast<double>(p.incidence[i][j]);
        t[i][e + i] = 1.0;
        t[i][cols - 1] = static_cast<double>(shifted_b[i]);
    }
    // Reduced-cost row z_j - c_j; optimal when all >= 0.
    std::vector<double> z(cols, 0.0);
    for (std::size_t j = 0; j < e; ++j) z[j] = -static_cast<double>(p.priorities[j]);

    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = e + i;

    for (;;) {
        // Bland: entering column = smallest index with negative reduced cost.
        std::size_t enter = cols - 1;
        for (std::size_t j = 0; j + 1 < cols; ++j) {
            if (z[j] < -kTol) {
                enter = j;
                break;
            }
        }
        if (enter == cols - 1) break;  // optimal

        // Min ratio; ties to the smallest basis variable index (Bland).
        std::size_t leave = m;
        double best_ratio = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (t[i][enter] <= kTol) continue;
            double ratio = t[i][cols - 1] / t[i][enter];
            if (leave == m || ratio < best_ratio - kTol ||
                (std::abs(ratio - best_ratio) <= kTol && basis[i] < basis[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave == m)
            throw std::logic_error("unbounded allocation LP (broken incidence input)");

        double pivot = t[leave][enter];
        for (std::size_t j = 0; j < cols; ++j) t[leave][j] /= pivot;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) continue;
            double f = t[i][enter];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols; ++j) t[i][j] -= f * t[leave][j];
        }
        double fz = z[enter];
        for (std::size_t j = 0; j < cols; ++j) z[j] -= fz * t[leave][j];
        basis[leave] = enter;
    }

    std::vector<double> y(e, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < e) y[basis[i]] = std::max(0.0, t[i][cols - 1]);

    for (std::size_t j = 0; j < e; ++j)
        sol.continuous_objective +=
            static_cast<double>(p.priorities[j]) * (static_cast<double>(l) + y[j]);

    // Floor to integer Gbps (small epsilon absorbs pivot round-off), then
    // verify exactly in integer arithmetic.
    sol.x.assign(e, 0);
    for (std::size_t j = 0; j < e; ++j)
        sol.x[j] = l + static_cast<std::int64_t>(std::floor(y[j] + 1e-6));

    std::vector<std::int64_t> used(m, 0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < e; ++j) used[i] += p.incidence[i][j] * sol.x[j];

    // If the epsilon ever rounded across a tight constraint, walk back the
    // lowest-priority edges on the violated row.
    for (std::size_t i = 0; i < m; ++i) {
        while (used[i] > p.capacities[i]) {
            std::size_t victim = e;
            for (std::size_t j = 0; j < e; ++j) {
                if (p.incidence[i][j] == 0 || sol.x[j] <= l) continue;
                if (victim == e || p.priorities[j] < p.priorities[victim]) victim = j;
            }
            if (victim == e) throw std::logic_error("cannot restore feasibility after rounding");
            sol.x[victim] -= 1;
            for (std::size_t r = 0; r < m; ++r) used[r] -= p.incidence[r][victim];
        }
    }

    // Repair pass: flooring can strand integer slack; hand it to edges in
    // descending priority order (ties to the lower column index).
    std::vector<std::size_t> order(e);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return p.priorities[a] > p.priorities[b];
    });
    for (std::size_t j : order) {
        std::int64_t room = std::numeric_limits<std::int64_t>::max();
        for (std::size_t i = 0; i < m; ++i)
            if (p.incidence[i][j] != 0) room = std::min(room, p.capacities[i] - used[i]);
        if (room > 0) {
            sol.x[j] += room;
            for (std::size_t i = 0; i < m; ++i)
                if (p.incidence[i][j] != 0) used[i] += room;
        }
    }

    sol.objective = dot(p.priorities, sol.x);
    sol.feasible = true;
    return sol;
}

AllocationSolution brute_force(const AllocationProblem& p, std::int64_t step) {
    p.validate();
    if (step <= 0) throw std::invalid_argument("step must be positive");

    const std::size_t m = p.num_sites();
    const std::size_t e = p.num_edges();
    const std::int64_t l = p.lower_bound;

    AllocationSolution sol;
    if (e == 0) {
        sol.feasible = true;
        return sol;
    }
    if (e > 5) throw GridTooLarge("grid oracle limited to 5 edges");
    for (std::size_t j = 0; j < e; ++j) {
        std::int64_t points = (column_cap(p, j) - l) / step + 1;
        if (points > 128) throw GridTooLarge("more than 128 grid points on edge " +
                                             std::to_string(j));
    }

    std::vector<std::int64_t> remaining(p.capacities);
    std::vector<std::int64_t> x(e, 0);
    std::vector<std::int64_t> best_x;
    std::int64_t best_obj = 0;
    bool found = false;

    // DFS from the highest candidate value down, so the first optimum seen
    // is the lexicographically largest one.
    auto rec = [&](auto&& self, std::size_t j, std::int64_t obj) -> void {
        if (j == e) {
            if (!found || obj > best_obj) {
                found = true;
                best_obj = obj;
                best_x = x;
            }
            return;
        }
        std::int64_t cap = std::numeric_limits<std::int64_t>::max();
        for (std::size_t i = 0; i < m; ++i)
            if (p.incidence[i][j] != 0) cap = std::min(cap, remaining[i]);
        if (cap < l) return;  // no value for this edge fits; prune
        std::int64_t v = l + ((cap - l) / step) * step;
        for (; v >= l; v -= step) {
            x[j] = v;
            for (std::size_t i = 0; i < m; ++i)
                if (p.incidence[i][j] != 0) remaining[i] -= v;
            self(self, j + 1, obj + p.priorities[j] * v);
            for (std::size_t i = 0; i < m; ++i)
                if (p.incidence[i][j] != 0) remaining[i] += v;
        }
        x[j] = 0;
    };
    rec(rec, 0, 0);

    if (!found) {
        sol.feasible = false;
        return sol;
    }
    sol.x = std::move(best_x);
    sol.objective = best_obj;
    sol.feasible = true;
    return sol;
}

}  // namespace flowdirector::lp
