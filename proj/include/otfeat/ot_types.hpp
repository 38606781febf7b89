#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "otfeat/error.hpp"

namespace otfeat {

// Maps entering an OT solve are capped at this many pixels by default; the
// cost matrix is quadratic in pixel count, so anything larger should be
// average-pooled first.
inline constexpr std::size_t kDefaultSizeCap = 4096;

// Pairwise ground costs, row-major: entry (i, j) is the cost of moving mass
// from source pixel i to target pixel j.
struct CostMatrix {
    std::size_t n_src = 0;
    std::size_t n_dst = 0;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * n_dst + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n_dst + j]; }

    double mean() const {
        double sum = 0.0;
        for (double v : values) sum += v;
        return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
    }
};

inline void validate(const CostMatrix& c) {
    if (c.n_src == 0 || c.n_dst == 0) {
        throw ShapeError("cost matrix sides must be positive");
    }
    if (c.values.size() != c.n_src * c.n_dst) {
        throw ShapeError("cost matrix storage does not match n_src*n_dst");
    }
    for (double v : c.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw DataError("cost matrix entries must be finite and >= 0");
        }
    }
}

enum class SolveMode { Sinkhorn, Exact };

// Solver controls. The entropy weight can be given absolutely (beta) or
// relative to the mean ground cost (beta_rel); the two are mutually
// exclusive and beta_rel = 0.05 is the default when neither is set.
// One iteration is one row update plus one column update.
struct OTParams {
    std::optional<double> beta;
    std::optional<double> beta_rel;
    int max_iters = 1000;
    double tol = 1e-6;
    bool log_domain = true;
    SolveMode mode = SolveMode::Sinkhorn;
};

inline double resolve_beta(const OTParams& params, double mean_cost) {
    if (params.beta && params.beta_rel) {
        throw ParamError("beta and beta_rel are mutually exclusive");
    }
    double beta;
    if (params.beta) {
        beta = *params.beta;
    } else {
        const double rel = params.beta_rel.value_or(0.05);
        if (!(rel > 0.0)) {
            throw ParamError("beta_rel must be > 0");
        }
        // An all-zero cost matrix has mean 0; any positive weight yields the
        // same (independent) coupling, so fall back to the relative value.
        beta = mean_cost > 0.0 ? rel * mean_cost : rel;
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw ParamError("resolved beta must be > 0");
    }
    return beta;
}

inline void validate(const OTParams& params) {
    if (params.max_iters < 1) {
        throw ParamError("max_iters must be >= 1");
    }
    if (!(params.tol > 0.0)) {
        throw ParamError("tol must be > 0");
    }
    if (params.beta && !(*params.beta > 0.0)) {
        throw ParamError("beta must be > 0");
    }
    if (params.beta_rel && !(*params.beta_rel > 0.0)) {
        throw ParamError("beta_rel must be > 0");
    }
}

// A coupling of source pixels to target pixels: nonnegative, with row sums
// mu and column sums nu (up to the solver's reported tolerance).
struct TransportPlan {
    std::size_t n_src = 0;
    std::size_t n_dst = 0;
    std::vector<double> values;
    std::vector<double> mu;
    std::vector<double> nu;

    double at(std::size_t i, std::size_t j) const { return values[i * n_dst + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n_dst + j]; }

    double total_mass() const {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum;
    }
};

struct OTResult {
    double transport_cost = 0.0;        // <C, T>, the ranking scalar
    double regularized_objective = 0.0; // <C, T> + beta * sum T log T
    std::optional<TransportPlan> plan;
    int iterations = 0;
    bool converged = false;
    double marginal_violation = 0.0;
    double beta = 0.0; // resolved entropy weight (0 for exact solves)
};

inline std::vector<double> uniform_marginal(std::size_t n) {
    if (n == 0) {
        throw ShapeError("marginal length must be >= 1");
    }
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

} // namespace otfeat
