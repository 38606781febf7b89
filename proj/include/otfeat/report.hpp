#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "otfeat/error.hpp"
#include "otfeat/retrieval.hpp"

namespace otfeat {

inline nlohmann::json result_to_json(const RetrievalResult& result) {
    nlohmann::json ranked = nlohmann::json::array();
    for (const RankedCandidate& rc : result.ranked) {
        ranked.push_back({{"candidate_id", rc.candidate_id},
                          {"transport_cost", rc.transport_cost},
                          {"converged", rc.converged}});
    }
    return {{"query_id", result.query_id},
            {"top", result.top},
            {"evaluated_full", result.evaluated_full},
            {"pruned", result.pruned},
            {"ranked", ranked}};
}

namespace detail {

inline RetrievalResult result_from_json(const nlohmann::json& doc) {
    RetrievalResult result;
    result.query_id = doc.at("query_id").get<std::string>();
    result.top = doc.value("top", std::string());
    result.evaluated_full = doc.value("evaluated_full", std::size_t{0});
    result.pruned = doc.value("pruned", std::size_t{0});
    for (const auto& rc : doc.at("ranked")) {
        result.ranked.push_back({rc.at("candidate_id").get<std::string>(),
                                 rc.at("transport_cost").get<double>(),
                                 rc.at("converged").get<bool>()});
    }
    return result;
}

} // namespace detail

// Reads query results: either a single result object (what `query --json`
// prints) or {"results": [...]} for a batch of them.
inline std::vector<RetrievalResult> read_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw RowError(path.string() + ": invalid JSON: " + e.what());
    }
    std::vector<RetrievalResult> results;
    try {
        if (doc.is_object() && doc.contains("results")) {
            for (const auto& r : doc["results"]) {
                results.push_back(detail::result_from_json(r));
            }
        } else if (doc.is_array()) {
            for (const auto& r : doc) {
                results.push_back(detail::result_from_json(r));
            }
        } else {
            results.push_back(detail::result_from_json(doc));
        }
    } catch (const nlohmann::json::exception& e) {
        throw RowError(path.string() + ": malformed results: " + e.what());
    }
    return results;
}

// CSV of ranked transport costs, one row per (query, candidate), sorted by
// (query_id, rank). Costs carry 6 significant digits. A query without
// candidates is a RowError naming it.
inline void cost_report(const std::vector<RetrievalResult>& results,
                        const std::filesystem::path& out_path) {
    for (const RetrievalResult& r : results) {
        if (r.ranked.empty()) {
            throw RowError("query \"" + r.query_id + "\" has no candidates to report");
        }
    }
    std::vector<const RetrievalResult*> order;
    order.reserve(results.size());
    for (const RetrievalResult& r : results) {
        order.push_back(&r);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const RetrievalResult* a, const RetrievalResult* b) {
                         return a->query_id < b->query_id;
                     });
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + out_path.string() + " for writing");
    }
    out << "query_id,candidate_id,rank,transport_cost,converged\n";
    char cost_buf[64];
    for (const RetrievalResult* r : order) {
        for (std::size_t rank = 0; rank < r->ranked.size(); ++rank) {
            const RankedCandidate& rc = r->ranked[rank];
            std::snprintf(cost_buf, sizeof(cost_buf), "%.6g", rc.transport_cost);
            out << r->query_id << ',' << rc.candidate_id << ',' << rank + 1 << ',' << cost_buf
                << ',' << (rc.converged ? "true" : "false") << '\n';
        }
    }
    if (!out) {
        throw IoError("write failed on " + out_path.string());
    }
}

} // namespace otfeat
