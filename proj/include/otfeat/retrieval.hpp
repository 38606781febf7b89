#pragma once

#include <algorithm>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "otfeat/index.hpp"
#include "otfeat/ot.hpp"

namespace otfeat {

struct RankedCandidate {
    std::string candidate_id;
    double transport_cost = 0.0;
    bool converged = false;
};

// Top-k nearest candidates by transport cost, ascending, ties broken by
// candidate id. evaluated_full + pruned always equals the index size.
struct RetrievalResult {
    std::string query_id;
    std::vector<RankedCandidate> ranked;
    std::string top;
    std::size_t evaluated_full = 0;
    std::size_t pruned = 0;
};

namespace detail {

inline bool rank_less(const RankedCandidate& a, const RankedCandidate& b) {
    if (a.transport_cost != b.transport_cost) {
        return a.transport_cost < b.transport_cost;
    }
    return a.candidate_id < b.candidate_id;
}

inline FeatureMap pooled_query(const FeatureMap& q, const FeatureIndex& index) {
    if (q.dim != index.dim) {
        throw ShapeError("query dim " + std::to_string(q.dim) + " != index dim " +
                         std::to_string(index.dim));
    }
    return avg_pool(q, index.pool_factor);
}

inline RetrievalResult finish_ranking(std::string query_id, std::vector<RankedCandidate> ranked,
                                      std::size_t k, std::size_t evaluated, std::size_t pruned) {
    std::sort(ranked.begin(), ranked.end(), rank_less);
    if (ranked.size() > k) {
        ranked.resize(k);
    }
    RetrievalResult result;
    result.query_id = std::move(query_id);
    result.ranked = std::move(ranked);
    result.top = result.ranked.empty() ? std::string() : result.ranked.front().candidate_id;
    result.evaluated_full = evaluated;
    result.pruned = pruned;
    return result;
}

} // namespace detail

// Scores the query against every candidate. This is the reference path; the
// pruned variant must match it result-for-result.
inline RetrievalResult query_exhaustive(const FeatureMap& q, const FeatureIndex& index,
                                        const OTParams& params, std::size_t k,
                                        unsigned threads = 0) {
    const FeatureMap query = detail::pooled_query(q, index);
    const std::size_t n = index.entries.size();
    k = std::min(k, n);

    std::vector<RankedCandidate> ranked(n);
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
    auto score_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const IndexEntry& entry = index.entries[i];
            const FeatureMap candidate = load_entry(index, entry);
            const OTResult r = ot_distance(query, candidate, params, params.mode, index.size_cap);
            ranked[i] = {entry.id, r.transport_cost, r.converged};
        }
    };
    if (threads <= 1) {
        score_range(0, n);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) {
                pool.emplace_back([&, t, begin, end] {
                    try {
                        score_range(begin, end);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
            }
        }
        for (auto& th : pool) {
            th.join();
        }
        for (const std::exception_ptr& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }
    return detail::finish_ranking(q.id, std::move(ranked), k, n, 0);
}

// Same contract as query_exhaustive, but candidates are visited in ascending
// order of the mean-difference lower bound and a candidate is skipped once
// its bound exceeds the current k-th best cost. The bound never exceeds the
// true cost, so the skip can only drop candidates that cannot enter the
// top-k; ids and costs come out identical to the exhaustive path.
inline RetrievalResult query_pruned(const FeatureMap& q, const FeatureIndex& index,
                                    const OTParams& params, std::size_t k) {
    const FeatureMap query = detail::pooled_query(q, index);
    const std::size_t n = index.entries.size();
    k = std::min(k, n);
    if (k == 0) {
        return detail::finish_ranking(q.id, {}, 0, 0, n);
    }

    const std::vector<double> query_mean = mean_vector(query);
    struct BoundedCandidate {
        double bound;
        std::size_t entry_index;
    };
    std::vector<BoundedCandidate> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = {mean_lower_bound(query_mean, index.entries[i].mean_vector), i};
    }
    std::sort(order.begin(), order.end(), [&](const BoundedCandidate& a, const BoundedCandidate& b) {
        if (a.bound != b.bound) return a.bound < b.bound;
        return index.entries[a.entry_index].id < index.entries[b.entry_index].id;
    });

    std::vector<RankedCandidate> evaluated;
    evaluated.reserve(std::min(n, 4 * k));
    // Costs of the current top-k, as a max-heap over (cost, id).
    std::vector<RankedCandidate> heap;
    heap.reserve(k + 1);
    std::size_t scored = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        if (heap.size() == k && order[pos].bound > heap.front().transport_cost) {
            break; // bounds only grow from here; nothing later can enter the top-k
        }
        const IndexEntry& entry = index.entries[order[pos].entry_index];
        const FeatureMap candidate = load_entry(index, entry);
        const OTResult r = ot_distance(query, candidate, params, params.mode, index.size_cap);
        ++scored;
        RankedCandidate rc{entry.id, r.transport_cost, r.converged};
        evaluated.push_back(rc);
        heap.push_back(rc);
        std::push_heap(heap.begin(), heap.end(), detail::rank_less);
        if (heap.size() > k) {
            std::pop_heap(heap.begin(), heap.end(), detail::rank_less);
            heap.pop_back();
        }
    }
    return detail::finish_ranking(q.id, std::move(evaluated), k, scored, n - scored);
}

} // namespace otfeat
