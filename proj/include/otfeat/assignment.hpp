#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "otfeat/ot_types.hpp"

namespace otfeat {

namespace detail {

// Shortest-augmenting-path assignment (Jonker-Volgenant / Kuhn-Munkres
// family, O(n^3)). Returns the column matched to each row.
inline std::vector<std::size_t> solve_assignment(const CostMatrix& c) {
    const std::size_t n = c.n_src;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0); // 1-based: match[j] = row assigned to column j
    std::vector<std::size_t> way(n + 1, 0);

    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            std::size_t j1 = 0;
            double delta = kInf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = c.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        if (match[j] != 0) {
            row_to_col[match[j] - 1] = j - 1;
        }
    }
    return row_to_col;
}

inline OTResult assignment_result(const CostMatrix& c, const std::vector<std::size_t>& perm) {
    const std::size_t n = c.n_src;
    const double w = 1.0 / static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += c.at(i, perm[i]);
    }
    OTResult result;
    result.transport_cost = sum / static_cast<double>(n);
    result.regularized_objective = result.transport_cost;
    result.iterations = 0;
    result.converged = true;
    result.marginal_violation = 0.0;
    result.beta = 0.0;
    TransportPlan plan;
    plan.n_src = n;
    plan.n_dst = n;
    plan.values.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        plan.at(i, perm[i]) = w;
    }
    plan.mu.assign(n, w);
    plan.nu.assign(n, w);
    result.plan = std::move(plan);
    return result;
}

} // namespace detail

// Exact OT for square cost matrices under uniform marginals: the optimum is
// a permutation, found by an O(n^3) assignment solve. transport_cost is the
// average cost along the optimal permutation.
inline OTResult exact_ot_assignment(const CostMatrix& c) {
    validate(c);
    if (c.n_src != c.n_dst) {
        throw ShapeError("exact OT requires a square cost matrix, got " +
                         std::to_string(c.n_src) + "x" + std::to_string(c.n_dst));
    }
    return detail::assignment_result(c, detail::solve_assignment(c));
}

// Test oracle: enumerates all n! permutations (n <= 8) and returns the
// minimum average cost. Must agree exactly with exact_ot_assignment.
inline OTResult brute_force_ot(const CostMatrix& c) {
    validate(c);
    if (c.n_src != c.n_dst) {
        throw ShapeError("brute-force OT requires a square cost matrix");
    }
    const std::size_t n = c.n_src;
    if (n > 8) {
        throw SizeError("brute-force OT enumerates n! permutations; n must be <= 8");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    double best_sum = std::numeric_limits<double>::infinity();
    do {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += c.at(i, perm[i]);
        }
        if (sum < best_sum) {
            best_sum = sum;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return detail::assignment_result(c, best);
}

} // namespace otfeat
