#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "otfeat/error.hpp"

namespace otfeat {

enum class Domain : std::uint8_t { Real = 0, Sim = 1 };

inline const char* domain_name(Domain d) {
    return d == Domain::Real ? "real" : "sim";
}

inline Domain domain_from_name(const std::string& s) {
    if (s == "real") return Domain::Real;
    if (s == "sim") return Domain::Sim;
    throw ManifestError("unknown domain \"" + s + "\" (expected \"real\" or \"sim\")");
}

// One encoder output: an h x w grid of d-dimensional pixel feature vectors,
// stored row-major as (row, column, channel). Immutable by convention once
// built; all operations below return fresh maps.
struct FeatureMap {
    std::string id;
    Domain domain = Domain::Real;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t dim = 0;
    std::vector<float> data;

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(height) * width;
    }

    std::span<const float> pixel(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }

    float at(std::uint32_t row, std::uint32_t col, std::uint32_t channel) const {
        return data[(static_cast<std::size_t>(row) * width + col) * dim + channel];
    }
};

// Throws if the map violates its invariants: positive dims, data length
// h*w*d, all values finite.
inline void validate(const FeatureMap& fm) {
    if (fm.height == 0 || fm.width == 0 || fm.dim == 0) {
        throw ShapeError("feature map \"" + fm.id + "\": dimensions must be positive");
    }
    const std::size_t expected = fm.pixel_count() * fm.dim;
    if (fm.data.size() != expected) {
        throw ShapeError("feature map \"" + fm.id + "\": data length " +
                         std::to_string(fm.data.size()) + " != h*w*d = " +
                         std::to_string(expected));
    }
    for (float v : fm.data) {
        if (!std::isfinite(v)) {
            throw DataError("feature map \"" + fm.id + "\": non-finite value in payload");
        }
    }
}

inline bool same_shape(const FeatureMap& a, const FeatureMap& b) {
    return a.height == b.height && a.width == b.width && a.dim == b.dim;
}

// Arithmetic mean over all pixels, one double per channel.
inline std::vector<double> mean_vector(const FeatureMap& fm) {
    std::vector<double> mean(fm.dim, 0.0);
    const std::size_t n = fm.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const float* p = fm.data.data() + i * fm.dim;
        for (std::uint32_t c = 0; c < fm.dim; ++c) {
            mean[c] += p[c];
        }
    }
    for (std::uint32_t c = 0; c < fm.dim; ++c) {
        mean[c] /= static_cast<double>(n);
    }
    return mean;
}

// Average pooling with a k x k block: output shape (h/k, w/k, d), each output
// vector the arithmetic mean of its block. k must divide both h and w.
// k = 1 returns the input unchanged. Mean pooling (not max) keeps the global
// mean vector intact, which the retrieval lower bound relies on.
inline FeatureMap avg_pool(const FeatureMap& fm, std::uint32_t factor) {
    if (factor == 0) {
        throw PoolError("pool factor must be >= 1");
    }
    if (factor == 1) {
        return fm;
    }
    if (fm.height % factor != 0 || fm.width % factor != 0) {
        throw PoolError("pool factor " + std::to_string(factor) +
                        " does not divide " + std::to_string(fm.height) + "x" +
                        std::to_string(fm.width));
    }
    FeatureMap out;
    out.id = fm.id;
    out.domain = fm.domain;
    out.height = fm.height / factor;
    out.width = fm.width / factor;
    out.dim = fm.dim;
    out.data.resize(static_cast<std::size_t>(out.height) * out.width * out.dim);

    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    std::vector<double> acc(fm.dim);
    for (std::uint32_t r = 0; r < out.height; ++r) {
        for (std::uint32_t c = 0; c < out.width; ++c) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::uint32_t br = 0; br < factor; ++br) {
                const std::uint32_t row = r * factor + br;
                for (std::uint32_t bc = 0; bc < factor; ++bc) {
                    const std::uint32_t col = c * factor + bc;
                    const float* p =
                        fm.data.data() +
                        (static_cast<std::size_t>(row) * fm.width + col) * fm.dim;
                    for (std::uint32_t ch = 0; ch < fm.dim; ++ch) {
                        acc[ch] += p[ch];
                    }
                }
            }
            float* o = out.data.data() +
                       (static_cast<std::size_t>(r) * out.width + c) * out.dim;
            for (std::uint32_t ch = 0; ch < fm.dim; ++ch) {
                o[ch] = static_cast<float>(acc[ch] * inv);
            }
        }
    }
    return out;
}

} // namespace otfeat
