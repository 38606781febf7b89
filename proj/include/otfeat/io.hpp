#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "otfeat/error.hpp"
#include "otfeat/feature_map.hpp"

namespace otfeat {

// RFM1 feature file, little-endian:
//   bytes 0-3   ASCII magic "RFM1"
//   byte  4     version, 0x01
//   byte  5     domain, 0x00 real / 0x01 sim
//   bytes 6-7   zero
//   bytes 8-11  h as u32
//   bytes 12-15 w as u32
//   bytes 16-19 d as u32
//   byte  20    zero
//   bytes 21... h*w*d IEEE-754 binary32, row-major (row, column, channel)
inline constexpr std::size_t kRfmHeaderSize = 21;
inline constexpr std::array<char, 4> kRfmMagic = {'R', 'F', 'M', '1'};
inline constexpr std::uint8_t kRfmVersion = 0x01;

namespace detail {

inline std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void write_u32_le(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

inline float float_from_le(const unsigned char* p) {
    const std::uint32_t bits = read_u32_le(p);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

inline void float_to_le(unsigned char* p, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    write_u32_le(p, bits);
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
        throw IoError("read failed on " + path.string());
    }
    return bytes;
}

} // namespace detail

// Decodes an RFM1 file. The file format carries no identity, so the returned
// map's id is the file stem; manifests override it with their own id.
inline FeatureMap read_feature_map(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = detail::slurp(path);
    const std::string where = path.string();
    if (bytes.size() < kRfmHeaderSize) {
        throw TruncationError(where + ": file shorter than the 21-byte header");
    }
    if (std::memcmp(bytes.data(), kRfmMagic.data(), 4) != 0) {
        throw FormatError(where + ": bad magic (expected \"RFM1\")");
    }
    if (bytes[4] != kRfmVersion) {
        throw FormatError(where + ": unsupported version " + std::to_string(bytes[4]));
    }
    if (bytes[5] != 0x00 && bytes[5] != 0x01) {
        throw FormatError(where + ": bad domain byte " + std::to_string(bytes[5]));
    }
    if (bytes[6] != 0 || bytes[7] != 0 || bytes[20] != 0) {
        throw FormatError(where + ": reserved header bytes must be zero");
    }
    FeatureMap fm;
    fm.id = path.stem().string();
    fm.domain = bytes[5] == 0x00 ? Domain::Real : Domain::Sim;
    fm.height = detail::read_u32_le(bytes.data() + 8);
    fm.width = detail::read_u32_le(bytes.data() + 12);
    fm.dim = detail::read_u32_le(bytes.data() + 16);
    if (fm.height == 0 || fm.width == 0 || fm.dim == 0) {
        throw FormatError(where + ": zero dimension in header");
    }
    const std::uint64_t count = static_cast<std::uint64_t>(fm.height) * fm.width * fm.dim;
    const std::uint64_t expected = kRfmHeaderSize + 4 * count;
    if (bytes.size() < expected) {
        throw TruncationError(where + ": payload truncated (" + std::to_string(bytes.size()) +
                              " bytes, expected " + std::to_string(expected) + ")");
    }
    if (bytes.size() > expected) {
        throw FormatError(where + ": trailing bytes after payload");
    }
    fm.data.resize(static_cast<std::size_t>(count));
    const unsigned char* p = bytes.data() + kRfmHeaderSize;
    for (std::size_t i = 0; i < fm.data.size(); ++i, p += 4) {
        fm.data[i] = detail::float_from_le(p);
        if (!std::isfinite(fm.data[i])) {
            throw DataError(where + ": non-finite value at element " + std::to_string(i));
        }
    }
    return fm;
}

inline void write_feature_map(const FeatureMap& fm, const std::filesystem::path& path) {
    validate(fm);
    std::vector<unsigned char> bytes(kRfmHeaderSize + 4 * fm.data.size(), 0);
    std::memcpy(bytes.data(), kRfmMagic.data(), 4);
    bytes[4] = kRfmVersion;
    bytes[5] = fm.domain == Domain::Real ? 0x00 : 0x01;
    detail::write_u32_le(bytes.data() + 8, fm.height);
    detail::write_u32_le(bytes.data() + 12, fm.width);
    detail::write_u32_le(bytes.data() + 16, fm.dim);
    unsigned char* p = bytes.data() + kRfmHeaderSize;
    for (float v : fm.data) {
        detail::float_to_le(p, v);
        p += 4;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed on " + path.string());
    }
}

struct ManifestItem {
    std::string id;
    std::filesystem::path path; // resolved against the manifest directory
    Domain domain = Domain::Real;
};

struct Manifest {
    std::vector<ManifestItem> items;
};

// Parses and fully validates a manifest: unique ids, every file present and
// decodable, declared domain matching the file's domain byte.
inline Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("items") || !doc["items"].is_array()) {
        throw ManifestError(path.string() + ": expected object with an \"items\" array");
    }
    const std::filesystem::path base = path.parent_path();
    Manifest manifest;
    std::unordered_set<std::string> seen;
    for (const auto& entry : doc["items"]) {
        if (!entry.is_object() || !entry.contains("id") || !entry.contains("path") ||
            !entry.contains("domain")) {
            throw ManifestError(path.string() + ": item missing id/path/domain");
        }
        ManifestItem item;
        try {
            item.id = entry["id"].get<std::string>();
            item.domain = domain_from_name(entry["domain"].get<std::string>());
            std::filesystem::path p = entry["path"].get<std::string>();
            item.path = p.is_absolute() ? p : base / p;
        } catch (const nlohmann::json::exception& e) {
            throw ManifestError(path.string() + ": malformed item: " + e.what());
        }
        if (!seen.insert(item.id).second) {
            throw ManifestError(path.string() + ": duplicate id \"" + item.id + "\"");
        }
        if (!std::filesystem::exists(item.path)) {
            throw ManifestError(path.string() + ": missing file " + item.path.string() +
                                " for id \"" + item.id + "\"");
        }
        FeatureMap fm;
        try {
            fm = read_feature_map(item.path);
        } catch (const Error& e) {
            throw ManifestError(path.string() + ": id \"" + item.id +
                                "\": " + e.what());
        }
        if (fm.domain != item.domain) {
            throw ManifestError(path.string() + ": id \"" + item.id + "\" declares domain " +
                                domain_name(item.domain) + " but file says " +
                                domain_name(fm.domain));
        }
        manifest.items.push_back(std::move(item));
    }
    return manifest;
}

// Emits a manifest whose paths are stored relative to the manifest directory
// when possible. Companion of read_manifest for dataset tooling.
inline void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    const std::filesystem::path base = path.parent_path();
    nlohmann::json items = nlohmann::json::array();
    for (const ManifestItem& item : manifest.items) {
        std::error_code ec;
        std::filesystem::path rel = std::filesystem::relative(item.path, base, ec);
        const std::string stored = (ec || rel.empty()) ? item.path.string() : rel.string();
        items.push_back({{"id", item.id}, {"path", stored}, {"domain", domain_name(item.domain)}});
    }
    nlohmann::json doc{{"items", items}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed on " + path.string());
    }
}

// Loads the map named by a manifest item, with the manifest id attached.
inline FeatureMap load_item(const ManifestItem& item) {
    FeatureMap fm = read_feature_map(item.path);
    fm.id = item.id;
    return fm;
}

// Decode-only import of a 3-D float32 array in the common ".npy" layout
// (format version 1.0/2.0, little-endian '<f4', C order). The canonical
// on-disk format stays RFM1; this is a convenience for getting encoder
// outputs into the toolchain.
inline FeatureMap read_npy_feature_map(const std::filesystem::path& path, Domain domain) {
    const std::vector<unsigned char> bytes = detail::slurp(path);
    const std::string where = path.string();
    static const unsigned char magic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
    if (bytes.size() < 10 || std::memcmp(bytes.data(), magic, 6) != 0) {
        throw FormatError(where + ": not an npy file");
    }
    const unsigned major = bytes[6];
    std::size_t header_len = 0;
    std::size_t header_off = 0;
    if (major == 1) {
        header_len = bytes[8] | (bytes[9] << 8);
        header_off = 10;
    } else if (major == 2) {
        if (bytes.size() < 12) {
            throw TruncationError(where + ": truncated npy header");
        }
        header_len = detail::read_u32_le(bytes.data() + 8);
        header_off = 12;
    } else {
        throw FormatError(where + ": unsupported npy version " + std::to_string(major));
    }
    if (bytes.size() < header_off + header_len) {
        throw TruncationError(where + ": truncated npy header");
    }
    const std::string header(reinterpret_cast<const char*>(bytes.data() + header_off),
                             header_len);
    if (header.find("'descr': '<f4'") == std::string::npos &&
        header.find("\"descr\": \"<f4\"") == std::string::npos) {
        throw FormatError(where + ": only little-endian float32 ('<f4') arrays are supported");
    }
    if (header.find("'fortran_order': False") == std::string::npos &&
        header.find("\"fortran_order\": false") == std::string::npos) {
        throw FormatError(where + ": only C-order arrays are supported");
    }
    const std::size_t sh = header.find("'shape':");
    const std::size_t open = header.find('(', sh);
    const std::size_t close = header.find(')', open);
    if (sh == std::string::npos || open == std::string::npos || close == std::string::npos) {
        throw FormatError(where + ": cannot parse npy shape");
    }
    std::vector<std::uint64_t> shape;
    std::string token;
    for (std::size_t i = open + 1; i <= close; ++i) {
        const char c = header[i];
        if (c >= '0' && c <= '9') {
            token += c;
        } else if (!token.empty()) {
            shape.push_back(std::stoull(token));
            token.clear();
        }
    }
    if (shape.size() != 3) {
        throw FormatError(where + ": expected a 3-D (h, w, d) array, got " +
                          std::to_string(shape.size()) + " dims");
    }
    FeatureMap fm;
    fm.id = path.stem().string();
    fm.domain = domain;
    fm.height = static_cast<std::uint32_t>(shape[0]);
    fm.width = static_cast<std::uint32_t>(shape[1]);
    fm.dim = static_cast<std::uint32_t>(shape[2]);
    if (fm.height == 0 || fm.width == 0 || fm.dim == 0) {
        throw FormatError(where + ": zero dimension in npy shape");
    }
    const std::uint64_t count = shape[0] * shape[1] * shape[2];
    const std::size_t data_off = header_off + header_len;
    if (bytes.size() < data_off + 4 * count) {
        throw TruncationError(where + ": npy payload truncated");
    }
    fm.data.resize(static_cast<std::size_t>(count));
    const unsigned char* p = bytes.data() + data_off;
    for (std::size_t i = 0; i < fm.data.size(); ++i, p += 4) {
        fm.data[i] = detail::float_from_le(p);
        if (!std::isfinite(fm.data[i])) {
            throw DataError(where + ": non-finite value at element " + std::to_string(i));
        }
    }
    return fm;
}

} // namespace otfeat
