#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "otfeat/error.hpp"
#include "otfeat/feature_map.hpp"
#include "otfeat/io.hpp"
#include "otfeat/ot.hpp"

namespace otfeat {

// One candidate in the index: its pooled mean vector eagerly, the payload
// lazily by path (or inline when the builder was asked to keep it).
struct IndexEntry {
    std::string id;
    Domain domain = Domain::Sim;
    std::filesystem::path path;
    std::vector<double> mean_vector;
    std::optional<FeatureMap> inline_map;
};

// Immutable candidate set for retrieval. pool_factor and size_cap are fixed
// at build time; queries are pooled to match automatically.
struct FeatureIndex {
    std::uint32_t dim = 0;
    std::uint32_t pool_factor = 1;
    std::size_t size_cap = kDefaultSizeCap;
    std::vector<IndexEntry> entries;
};

// Builds an index over a validated manifest: every map is pooled, checked
// against the size cap, and summarized by its mean vector. Entries are
// stored sorted by id. Set inline_payloads to keep the pooled maps in
// memory instead of re-reading them per query.
inline FeatureIndex build_index(const Manifest& manifest, std::uint32_t pool_factor,
                                std::size_t size_cap = kDefaultSizeCap,
                                bool inline_payloads = false) {
    if (manifest.items.empty()) {
        throw IndexError("cannot build an index from an empty manifest");
    }
    if (pool_factor == 0) {
        throw PoolError("pool factor must be >= 1");
    }
    FeatureIndex index;
    index.pool_factor = pool_factor;
    index.size_cap = size_cap;
    for (const ManifestItem& item : manifest.items) {
        FeatureMap pooled = avg_pool(load_item(item), pool_factor);
        if (index.entries.empty()) {
            index.dim = pooled.dim;
        } else if (pooled.dim != index.dim) {
            throw ShapeError("index entries must share dim: \"" + item.id + "\" has d=" +
                             std::to_string(pooled.dim) + ", index has d=" +
                             std::to_string(index.dim));
        }
        if (pooled.pixel_count() > size_cap) {
            throw SizeError("entry \"" + item.id + "\" has " +
                            std::to_string(pooled.pixel_count()) +
                            " pixels after pooling, above the cap of " +
                            std::to_string(size_cap));
        }
        IndexEntry entry;
        entry.id = item.id;
        entry.domain = item.domain;
        entry.path = item.path;
        entry.mean_vector = mean_vector(pooled);
        if (inline_payloads) {
            entry.inline_map = std::move(pooled);
        }
        index.entries.push_back(std::move(entry));
    }
    std::sort(index.entries.begin(), index.entries.end(),
              [](const IndexEntry& a, const IndexEntry& b) { return a.id < b.id; });
    return index;
}

// Pooled payload for one entry, from memory or disk.
inline FeatureMap load_entry(const FeatureIndex& index, const IndexEntry& entry) {
    if (entry.inline_map) {
        return *entry.inline_map;
    }
    FeatureMap fm = read_feature_map(entry.path);
    fm.id = entry.id;
    return avg_pool(fm, index.pool_factor);
}

// Index metadata as JSON, with feature paths stored relative to the index
// file so the tree can be moved as a unit. Payloads stay in their RFM1 files.
inline void save_index(const FeatureIndex& index, const std::filesystem::path& path) {
    const std::filesystem::path base = path.parent_path();
    nlohmann::json entries = nlohmann::json::array();
    for (const IndexEntry& entry : index.entries) {
        std::error_code ec;
        std::filesystem::path rel = std::filesystem::relative(entry.path, base, ec);
        const std::string stored = (ec || rel.empty()) ? entry.path.string() : rel.string();
        entries.push_back({{"id", entry.id},
                           {"domain", domain_name(entry.domain)},
                           {"path", stored},
                           {"mean_vector", entry.mean_vector}});
    }
    nlohmann::json doc{{"dim", index.dim},
                       {"pool_factor", index.pool_factor},
                       {"size_cap", index.size_cap},
                       {"entries", entries}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed on " + path.string());
    }
}

inline FeatureIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IndexError(path.string() + ": invalid JSON: " + e.what());
    }
    FeatureIndex index;
    std::unordered_set<std::string> seen;
    try {
        index.dim = doc.at("dim").get<std::uint32_t>();
        index.pool_factor = doc.at("pool_factor").get<std::uint32_t>();
        index.size_cap = doc.at("size_cap").get<std::size_t>();
        if (index.dim == 0 || index.pool_factor == 0 || index.size_cap == 0) {
            throw IndexError(path.string() + ": dim, pool_factor, size_cap must be positive");
        }
        const std::filesystem::path base = path.parent_path();
        for (const auto& e : doc.at("entries")) {
            IndexEntry entry;
            entry.id = e.at("id").get<std::string>();
            entry.domain = domain_from_name(e.at("domain").get<std::string>());
            std::filesystem::path p = e.at("path").get<std::string>();
            entry.path = p.is_absolute() ? p : base / p;
            entry.mean_vector = e.at("mean_vector").get<std::vector<double>>();
            if (entry.mean_vector.size() != index.dim) {
                throw IndexError(path.string() + ": entry \"" + entry.id +
                                 "\" mean vector length mismatch");
            }
            if (!seen.insert(entry.id).second) {
                throw IndexError(path.string() + ": duplicate entry id \"" + entry.id + "\"");
            }
            index.entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IndexError(path.string() + ": malformed index: " + e.what());
    }
    if (index.entries.empty()) {
        throw IndexError(path.string() + ": index has no entries");
    }
    return index;
}

} // namespace otfeat
