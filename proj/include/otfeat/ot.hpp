#pragma once

#include <cmath>
#include <string>

#include "otfeat/assignment.hpp"
#include "otfeat/feature_map.hpp"
#include "otfeat/ot_types.hpp"
#include "otfeat/sinkhorn.hpp"

namespace otfeat {

// Squared-l2 ground cost between every source pixel and every target pixel:
// entry (i, j) = sum_c (a_i[c] - b_j[c])^2, pixels in row-major order.
inline CostMatrix cost_matrix(const FeatureMap& a, const FeatureMap& b,
                              std::size_t size_cap = kDefaultSizeCap) {
    if (a.dim != b.dim) {
        throw ShapeError("feature dims differ: " + std::to_string(a.dim) + " vs " +
                         std::to_string(b.dim));
    }
    const std::size_t n = a.pixel_count();
    const std::size_t m = b.pixel_count();
    if (n > size_cap || m > size_cap) {
        throw SizeError("map has " + std::to_string(std::max(n, m)) +
                        " pixels, above the cap of " + std::to_string(size_cap) +
                        "; avg_pool the maps first or raise the cap");
    }
    CostMatrix c;
    c.n_src = n;
    c.n_dst = m;
    c.values.resize(n * m);
    const std::uint32_t d = a.dim;
    for (std::size_t i = 0; i < n; ++i) {
        const float* pa = a.data.data() + i * d;
        double* crow = c.values.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const float* pb = b.data.data() + j * d;
            double sum = 0.0;
            for (std::uint32_t ch = 0; ch < d; ++ch) {
                const double diff = static_cast<double>(pa[ch]) - static_cast<double>(pb[ch]);
                sum += diff * diff;
            }
            crow[j] = sum;
        }
    }
    return c;
}

// ||mean(a) - mean(b)||^2. For the squared-l2 ground cost this never exceeds
// the cost of any coupling with uniform marginals (Jensen), which makes it a
// safe prune-before-solve bound for retrieval.
inline double mean_lower_bound(const FeatureMap& a, const FeatureMap& b) {
    if (a.dim != b.dim) {
        throw ShapeError("feature dims differ: " + std::to_string(a.dim) + " vs " +
                         std::to_string(b.dim));
    }
    const std::vector<double> ma = mean_vector(a);
    const std::vector<double> mb = mean_vector(b);
    double sum = 0.0;
    for (std::size_t c = 0; c < ma.size(); ++c) {
        const double diff = ma[c] - mb[c];
        sum += diff * diff;
    }
    return sum;
}

inline double mean_lower_bound(std::span<const double> mean_a, std::span<const double> mean_b) {
    if (mean_a.size() != mean_b.size()) {
        throw ShapeError("mean vector dims differ");
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < mean_a.size(); ++c) {
        const double diff = mean_a[c] - mean_b[c];
        sum += diff * diff;
    }
    return sum;
}

// Pixel-level OT distance between two feature maps: squared-l2 costs,
// uniform weights over pixels, solved entropically (Sinkhorn) or exactly
// (assignment; requires equal pixel counts). The plan is dropped — callers
// rank by transport_cost.
inline OTResult ot_distance(const FeatureMap& a, const FeatureMap& b, const OTParams& params,
                            SolveMode mode, std::size_t size_cap = kDefaultSizeCap) {
    const CostMatrix c = cost_matrix(a, b, size_cap);
    OTResult result;
    if (mode == SolveMode::Exact) {
        if (c.n_src != c.n_dst) {
            throw ShapeError("exact mode needs equal pixel counts, got " +
                             std::to_string(c.n_src) + " vs " + std::to_string(c.n_dst) +
                             "; pool to matching shapes or use sinkhorn");
        }
        result = exact_ot_assignment(c);
    } else {
        const std::vector<double> mu = uniform_marginal(c.n_src);
        const std::vector<double> nu = uniform_marginal(c.n_dst);
        result = sinkhorn(c, mu, nu, params);
    }
    result.plan.reset();
    return result;
}

inline OTResult ot_distance(const FeatureMap& a, const FeatureMap& b, const OTParams& params,
                            std::size_t size_cap = kDefaultSizeCap) {
    return ot_distance(a, b, params, params.mode, size_cap);
}

} // namespace otfeat
