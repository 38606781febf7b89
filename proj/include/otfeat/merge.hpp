#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "otfeat/error.hpp"
#include "otfeat/feature_map.hpp"
#include "otfeat/io.hpp"
#include "otfeat/retrieval.hpp"

namespace otfeat {

// Convex-combination weight on the real feature; the sim side gets 1-alpha.
// 0.6 is the recommended real:sim ratio.
struct MergeConfig {
    double alpha = 0.6;
};

namespace detail {

inline std::string format_alpha(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", alpha);
    return buf;
}

} // namespace detail

// Elementwise blend alpha*real + (1-alpha)*sim. Shapes must match exactly —
// the merged map substitutes the real one downstream, so it keeps the Real
// domain tag. alpha = 1 and alpha = 0 reproduce the parents bit-for-bit.
inline FeatureMap convex_merge(const FeatureMap& real, const FeatureMap& sim,
                               const MergeConfig& cfg) {
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
        throw ParamError("alpha must be in [0, 1]");
    }
    if (!same_shape(real, sim)) {
        throw ShapeError("merge shapes differ: " + std::to_string(real.height) + "x" +
                         std::to_string(real.width) + "x" + std::to_string(real.dim) + " vs " +
                         std::to_string(sim.height) + "x" + std::to_string(sim.width) + "x" +
                         std::to_string(sim.dim));
    }
    FeatureMap out;
    out.id = "merged:" + real.id + "+" + sim.id + "@" + detail::format_alpha(cfg.alpha);
    out.domain = Domain::Real;
    out.height = real.height;
    out.width = real.width;
    out.dim = real.dim;
    if (cfg.alpha == 1.0) {
        out.data = real.data;
    } else if (cfg.alpha == 0.0) {
        out.data = sim.data;
    } else {
        out.data.resize(real.data.size());
        const double a = cfg.alpha;
        const double b = 1.0 - cfg.alpha;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            out.data[i] = static_cast<float>(a * real.data[i] + b * sim.data[i]);
        }
    }
    return out;
}

struct MergedItem {
    FeatureMap map;
    std::string real_id;
    std::string sim_id;
    double alpha = 0.6;
    double transport_cost = 0.0;
};

struct MergeFailure {
    std::string real_id;
    std::string error;
};

// Output of a batch merge: one item per real map that retrieved and merged
// successfully, plus a failure record per skipped item. train_ids/val_ids
// partition the item ids; a fresh batch puts everything in val until
// split_dataset assigns the split.
struct MergedSet {
    double alpha = 0.6;
    std::vector<MergedItem> items;
    std::vector<MergeFailure> failures;
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
};

// For each real map: retrieve its nearest sim feature (pruned query, k = 1),
// then blend the pooled parents. Items come out sorted by real_id no matter
// how many threads ran; per-item errors are recorded, not fatal.
inline MergedSet batch_merge(const Manifest& real_manifest, const FeatureIndex& index,
                             const MergeConfig& cfg, const OTParams& params,
                             unsigned threads = 0) {
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
        throw ParamError("alpha must be in [0, 1]");
    }
    std::vector<const ManifestItem*> order;
    order.reserve(real_manifest.items.size());
    for (const ManifestItem& item : real_manifest.items) {
        order.push_back(&item);
    }
    std::sort(order.begin(), order.end(),
              [](const ManifestItem* a, const ManifestItem* b) { return a->id < b->id; });

    const std::size_t n = order.size();
    std::vector<std::optional<MergedItem>> slots(n);
    std::vector<std::optional<MergeFailure>> fails(n);

    auto process = [&](std::size_t i) {
        const ManifestItem& item = *order[i];
        try {
            const FeatureMap real = load_item(item);
            const RetrievalResult hit = query_pruned(real, index, params, 1);
            if (hit.ranked.empty()) {
                throw IndexError("index returned no candidates");
            }
            const IndexEntry* entry = nullptr;
            for (const IndexEntry& e : index.entries) {
                if (e.id == hit.top) {
                    entry = &e;
                    break;
                }
            }
            if (entry == nullptr) {
                throw IndexError("top candidate \"" + hit.top + "\" not in index");
            }
            const FeatureMap pooled_real = avg_pool(real, index.pool_factor);
            const FeatureMap pooled_sim = load_entry(index, *entry);
            MergedItem merged;
            merged.map = convex_merge(pooled_real, pooled_sim, cfg);
            merged.real_id = item.id;
            merged.sim_id = entry->id;
            merged.alpha = cfg.alpha;
            merged.transport_cost = hit.ranked.front().transport_cost;
            slots[i] = std::move(merged);
        } catch (const std::exception& e) {
            fails[i] = MergeFailure{item.id, e.what()};
        }
    };

    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            process(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    process(i);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    MergedSet out;
    out.alpha = cfg.alpha;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) {
            out.val_ids.push_back(slots[i]->map.id);
            out.items.push_back(std::move(*slots[i]));
        } else if (fails[i]) {
            out.failures.push_back(std::move(*fails[i]));
        }
    }
    return out;
}

// Deterministic shuffle used by split_dataset, fixed across platforms:
// Fisher-Yates driven by the 64-bit LCG
//   state <- state * 6364136223846793005 + 1442695040888963407
// seeded with `seed`, drawing j = (state >> 33) mod (i + 1) for i = N-1..1.
inline std::vector<std::size_t> split_shuffle(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) {
        perm[i] = i;
    }
    std::uint64_t state = seed;
    auto next = [&state]() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return state >> 33;
    };
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(next() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

// Assigns the first train_count ids of the shuffled order to train, the rest
// to val. Same seed, same items: same split.
inline MergedSet split_dataset(MergedSet ms, std::size_t train_count, std::uint64_t seed) {
    if (train_count > ms.items.size()) {
        throw ParamError("train_count " + std::to_string(train_count) + " exceeds item count " +
                         std::to_string(ms.items.size()));
    }
    const std::vector<std::size_t> perm = split_shuffle(ms.items.size(), seed);
    ms.train_ids.clear();
    ms.val_ids.clear();
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        const std::string& id = ms.items[perm[pos]].map.id;
        if (pos < train_count) {
            ms.train_ids.push_back(id);
        } else {
            ms.val_ids.push_back(id);
        }
    }
    return ms;
}

// Writes the merged features as RFM1 files under <out_dir>/features plus a
// merged_manifest.json with per-item provenance (parents, alpha, transport
// cost, split). Paths in the manifest are relative to the manifest file.
inline std::filesystem::path write_merged_set(const MergedSet& ms,
                                              const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "features", ec);
    if (ec) {
        throw IoError("cannot create " + (out_dir / "features").string() + ": " + ec.message());
    }
    std::unordered_set<std::string> train(ms.train_ids.begin(), ms.train_ids.end());
    nlohmann::json items = nlohmann::json::array();
    for (const MergedItem& item : ms.items) {
        const std::string rel = "features/" + item.real_id + ".merged.rfm";
        write_feature_map(item.map, out_dir / rel);
        items.push_back({{"id", item.map.id},
                         {"real_id", item.real_id},
                         {"sim_id", item.sim_id},
                         {"path", rel},
                         {"transport_cost", item.transport_cost},
                         {"split", train.count(item.map.id) ? "train" : "val"}});
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const MergeFailure& f : ms.failures) {
        failures.push_back({{"real_id", f.real_id}, {"error", f.error}});
    }
    nlohmann::json doc{{"alpha", ms.alpha}, {"items", items}, {"failures", failures}};
    const fs::path manifest_path = out_dir / "merged_manifest.json";
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + manifest_path.string() + " for writing");
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed on " + manifest_path.string());
    }
    return manifest_path;
}

// Re-splits an existing merged manifest in place without touching the
// feature files. Items are shuffled in their canonical (real_id) order with
// the same generator as split_dataset. Returns (train, val) counts.
inline std::pair<std::size_t, std::size_t> split_merged_manifest(
    const std::filesystem::path& manifest_path, std::size_t train_count, std::uint64_t seed) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw IoError("cannot open " + manifest_path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(manifest_path.string() + ": invalid JSON: " + e.what());
    }
    in.close();
    if (!doc.is_object() || !doc.contains("items") || !doc["items"].is_array()) {
        throw ManifestError(manifest_path.string() + ": expected a merged manifest");
    }
    auto& items = doc["items"];
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    try {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return items[a].at("real_id").get<std::string>() <
                   items[b].at("real_id").get<std::string>();
        });
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(manifest_path.string() + ": malformed item: " + e.what());
    }
    if (train_count > items.size()) {
        throw ParamError("train_count " + std::to_string(train_count) + " exceeds item count " +
                         std::to_string(items.size()));
    }
    const std::vector<std::size_t> perm = split_shuffle(items.size(), seed);
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        items[order[perm[pos]]]["split"] = pos < train_count ? "train" : "val";
    }
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + manifest_path.string() + " for writing");
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed on " + manifest_path.string());
    }
    return {train_count, items.size() - train_count};
}

} // namespace otfeat
