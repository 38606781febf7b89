#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "otfeat/ot_types.hpp"

namespace otfeat {

namespace detail {

inline void check_marginal(std::span<const double> v, std::size_t expected, const char* name) {
    if (v.size() != expected) {
        throw MarginalError(std::string(name) + " has length " + std::to_string(v.size()) +
                            ", expected " + std::to_string(expected));
    }
    double sum = 0.0;
    for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw MarginalError(std::string(name) + " entries must be finite and > 0");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw MarginalError(std::string(name) + " sums to " + std::to_string(sum) +
                            ", expected 1 within 1e-9");
    }
}

// Marginal violation of T = exp((f + g - C)/beta) in L-infinity, plus the
// plan itself written into `plan`.
inline double log_domain_violation(const CostMatrix& c, const std::vector<double>& f,
                                   const std::vector<double>& g, double beta,
                                   std::span<const double> mu, std::span<const double> nu,
                                   std::vector<double>& plan, std::vector<double>& colsum) {
    const std::size_t n = c.n_src, m = c.n_dst;
    const double inv_beta = 1.0 / beta;
    colsum.assign(m, 0.0);
    double viol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* crow = c.values.data() + i * m;
        double* trow = plan.data() + i * m;
        double rowsum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double t = std::exp((f[i] + g[j] - crow[j]) * inv_beta);
            trow[j] = t;
            rowsum += t;
            colsum[j] += t;
        }
        viol = std::max(viol, std::abs(rowsum - mu[i]));
    }
    for (std::size_t j = 0; j < m; ++j) {
        viol = std::max(viol, std::abs(colsum[j] - nu[j]));
    }
    return viol;
}

// One log-domain iteration at entropy weight `beta`: a row update followed by
// a column update, each a log-sum-exp with per-row/column max subtraction.
inline void log_domain_sweep(const CostMatrix& c, std::vector<double>& f, std::vector<double>& g,
                             double beta, const std::vector<double>& log_mu,
                             const std::vector<double>& log_nu, std::vector<double>& scratch) {
    const std::size_t n = c.n_src, m = c.n_dst;
    const double inv_beta = 1.0 / beta;

    for (std::size_t i = 0; i < n; ++i) {
        const double* crow = c.values.data() + i * m;
        double amax = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
            amax = std::max(amax, (g[j] - crow[j]) * inv_beta);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            sum += std::exp((g[j] - crow[j]) * inv_beta - amax);
        }
        f[i] = beta * log_mu[i] - beta * (amax + std::log(sum));
    }

    // Column pass over a row-major matrix: one sweep for the max, one for the
    // stabilized sum.
    double* bmax = scratch.data();      // m entries
    double* bsum = scratch.data() + m;  // m entries
    std::fill(bmax, bmax + m, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const double* crow = c.values.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            bmax[j] = std::max(bmax[j], (f[i] - crow[j]) * inv_beta);
        }
    }
    std::fill(bsum, bsum + m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* crow = c.values.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            bsum[j] += std::exp((f[i] - crow[j]) * inv_beta - bmax[j]);
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        g[j] = beta * log_nu[j] - beta * (bmax[j] + std::log(bsum[j]));
    }
}

inline OTResult finish(const CostMatrix& c, std::vector<double> plan_values, double beta,
                       std::span<const double> mu, std::span<const double> nu, int iterations,
                       bool converged, double violation) {
    OTResult result;
    result.beta = beta;
    result.iterations = iterations;
    result.converged = converged;
    result.marginal_violation = violation;
    double cost = 0.0;
    double neg_entropy = 0.0;
    for (std::size_t k = 0; k < plan_values.size(); ++k) {
        const double t = plan_values[k];
        cost += c.values[k] * t;
        if (t > 0.0) {
            neg_entropy += t * std::log(t);
        }
    }
    result.transport_cost = cost;
    result.regularized_objective = cost + beta * neg_entropy;
    TransportPlan plan;
    plan.n_src = c.n_src;
    plan.n_dst = c.n_dst;
    plan.values = std::move(plan_values);
    plan.mu.assign(mu.begin(), mu.end());
    plan.nu.assign(nu.begin(), nu.end());
    result.plan = std::move(plan);
    return result;
}

} // namespace detail

// Entropy-regularized OT by alternating scaling of the kernel exp(-C/beta):
// the returned plan is T = diag(u) K diag(v), iterated until the L-infinity
// marginal violation drops to params.tol or the iteration budget runs out.
//
// In log_domain mode (the default) the scalings are computed as log-sum-exp
// with per-row/column max subtraction, so arbitrarily small beta is safe.
// When beta is small relative to the mean cost, the potentials are warmed up
// over a halving schedule of entropy weights before the final phase; every
// warm sweep counts against max_iters. The naive mode scales the kernel
// directly and reports NumericalError if it underflows.
inline OTResult sinkhorn(const CostMatrix& c, std::span<const double> mu,
                         std::span<const double> nu, const OTParams& params) {
    validate(c);
    validate(params);
    detail::check_marginal(mu, c.n_src, "mu");
    detail::check_marginal(nu, c.n_dst, "nu");

    const double mean_cost = c.mean();
    const double beta = resolve_beta(params, mean_cost);
    const std::size_t n = c.n_src, m = c.n_dst;

    if (!params.log_domain) {
        // Plain scaling on K = exp(-C/beta).
        std::vector<double> kernel(n * m);
        for (std::size_t k = 0; k < kernel.size(); ++k) {
            kernel[k] = std::exp(-c.values[k] / beta);
        }
        std::vector<double> u(n, 1.0), v(m, 1.0), kv(n), ktu(m);
        int it = 0;
        bool converged = false;
        double viol = std::numeric_limits<double>::infinity();
        while (it < params.max_iters) {
            ++it;
            // u = mu ./ (K v)
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                const double* krow = kernel.data() + i * m;
                for (std::size_t j = 0; j < m; ++j) s += krow[j] * v[j];
                kv[i] = s;
                if (!(s > 0.0) || !std::isfinite(s)) {
                    throw NumericalError("kernel underflow in naive Sinkhorn; use log_domain");
                }
                u[i] = mu[i] / s;
            }
            // v = nu ./ (K^T u)
            std::fill(ktu.begin(), ktu.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double* krow = kernel.data() + i * m;
                for (std::size_t j = 0; j < m; ++j) ktu[j] += krow[j] * u[i];
            }
            for (std::size_t j = 0; j < m; ++j) {
                if (!(ktu[j] > 0.0) || !std::isfinite(ktu[j])) {
                    throw NumericalError("kernel underflow in naive Sinkhorn; use log_domain");
                }
                v[j] = nu[j] / ktu[j];
            }
            // Column sums are exact after the v update; check rows.
            viol = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                const double* krow = kernel.data() + i * m;
                for (std::size_t j = 0; j < m; ++j) s += krow[j] * v[j];
                kv[i] = s;
                viol = std::max(viol, std::abs(u[i] * s - mu[i]));
            }
            if (viol <= params.tol) {
                converged = true;
                break;
            }
        }
        std::vector<double> plan(n * m);
        for (std::size_t i = 0; i < n; ++i) {
            const double* krow = kernel.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) {
                plan[i * m + j] = u[i] * krow[j] * v[j];
            }
        }
        std::vector<double> colsum(m, 0.0);
        double full_viol = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double rowsum = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                rowsum += plan[i * m + j];
                colsum[j] += plan[i * m + j];
            }
            full_viol = std::max(full_viol, std::abs(rowsum - mu[i]));
        }
        for (std::size_t j = 0; j < m; ++j) {
            full_viol = std::max(full_viol, std::abs(colsum[j] - nu[j]));
        }
        if (!std::isfinite(full_viol)) {
            throw NumericalError("non-finite plan in naive Sinkhorn; use log_domain");
        }
        return detail::finish(c, std::move(plan), beta, mu, nu, it, converged, full_viol);
    }

    // Log-domain path.
    std::vector<double> f(n, 0.0), g(m, 0.0);
    std::vector<double> log_mu(n), log_nu(m);
    for (std::size_t i = 0; i < n; ++i) log_mu[i] = std::log(mu[i]);
    for (std::size_t j = 0; j < m; ++j) log_nu[j] = std::log(nu[j]);
    std::vector<double> scratch(2 * m);
    std::vector<double> plan(n * m);
    std::vector<double> colsum(m);

    // Entropy-weight continuation: below this fraction of the mean cost the
    // plain iteration stalls, so warm-start the potentials down a halving
    // schedule. Each warm level runs a fixed number of blind sweeps.
    constexpr double kScaleThreshold = 0.05;
    constexpr int kWarmSweeps = 12;
    std::vector<double> schedule;
    if (mean_cost > 0.0 && beta < kScaleThreshold * mean_cost) {
        for (double level = mean_cost; level > 2.0 * beta; level *= 0.5) {
            schedule.push_back(level);
        }
    }
    schedule.push_back(beta);

    int it = 0;
    bool converged = false;
    double viol = std::numeric_limits<double>::infinity();
    for (std::size_t li = 0; li < schedule.size() && it < params.max_iters; ++li) {
        const double level = schedule[li];
        const bool final_level = li + 1 == schedule.size();
        if (!final_level) {
            for (int s = 0; s < kWarmSweeps && it < params.max_iters; ++s) {
                detail::log_domain_sweep(c, f, g, level, log_mu, log_nu, scratch);
                ++it;
            }
            continue;
        }
        while (it < params.max_iters) {
            detail::log_domain_sweep(c, f, g, level, log_mu, log_nu, scratch);
            ++it;
            viol = detail::log_domain_violation(c, f, g, level, mu, nu, plan, colsum);
            if (viol <= params.tol) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        viol = detail::log_domain_violation(c, f, g, beta, mu, nu, plan, colsum);
        converged = viol <= params.tol;
    }
    return detail::finish(c, std::move(plan), beta, mu, nu, it, converged, viol);
}

} // namespace otfeat
