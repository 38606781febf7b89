#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "otfeat/io.hpp"
#include "testutil.hpp"

using namespace otfeat;

namespace {

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

// Hand-assembled RFM1 file for a 2x2x1 real map with payload 1,2,3,4.
std::vector<unsigned char> sample_rfm_bytes() {
    std::vector<unsigned char> bytes(21 + 16, 0);
    std::memcpy(bytes.data(), "RFM1", 4);
    bytes[4] = 0x01;
    bytes[5] = 0x00;
    bytes[8] = 2;  // h
    bytes[12] = 2; // w
    bytes[16] = 1; // d
    const float payload[4] = {1.0f, 2.0f, 3.0f, 4.0f};
    std::memcpy(bytes.data() + 21, payload, 16);
    return bytes;
}

} // namespace

TEST(Rfm, DecodesHandAssembledFile) {
    test::TempDir dir("rfm_decode");
    const auto path = dir.path() / "k1.rfm";
    write_bytes(path, sample_rfm_bytes());
    const FeatureMap fm = read_feature_map(path);
    EXPECT_EQ(fm.id, "k1");
    EXPECT_EQ(fm.domain, Domain::Real);
    EXPECT_EQ(fm.height, 2u);
    EXPECT_EQ(fm.width, 2u);
    EXPECT_EQ(fm.dim, 1u);
    EXPECT_EQ(fm.data, (std::vector<float>{1.0f, 2.0f, 3.0f, 4.0f}));
}

TEST(Rfm, SmallestLegalMapIs25Bytes) {
    test::TempDir dir("rfm_small");
    const auto path = dir.path() / "zero.rfm";
    write_feature_map(FeatureMap{"zero", Domain::Real, 1, 1, 1, {0.0f}}, path);
    const auto bytes = file_bytes(path);
    ASSERT_EQ(bytes.size(), 25u);
    EXPECT_EQ(std::memcmp(bytes.data(), "RFM1", 4), 0);
    EXPECT_EQ(bytes[4], 0x01);
    EXPECT_EQ(bytes[5], 0x00);
    for (std::size_t i : {6, 7, 20}) {
        EXPECT_EQ(bytes[i], 0) << "reserved byte " << i;
    }
    EXPECT_EQ(bytes[8], 1);
    EXPECT_EQ(bytes[12], 1);
    EXPECT_EQ(bytes[16], 1);
    // f32 zero payload
    EXPECT_EQ(bytes[21] | bytes[22] | bytes[23] | bytes[24], 0);
}

TEST(Rfm, RejectsBadMagic) {
    test::TempDir dir("rfm_magic");
    auto bytes = sample_rfm_bytes();
    std::memcpy(bytes.data(), "XXXX", 4);
    const auto path = dir.path() / "bad.rfm";
    write_bytes(path, bytes);
    EXPECT_THROW(read_feature_map(path), FormatError);
}

TEST(Rfm, RejectsBadVersion) {
    test::TempDir dir("rfm_version");
    auto bytes = sample_rfm_bytes();
    bytes[4] = 0x02;
    const auto path = dir.path() / "bad.rfm";
    write_bytes(path, bytes);
    EXPECT_THROW(read_feature_map(path), FormatError);
}

TEST(Rfm, RejectsBadDomainByte) {
    test::TempDir dir("rfm_domain");
    auto bytes = sample_rfm_bytes();
    bytes[5] = 0x07;
    const auto path = dir.path() / "bad.rfm";
    write_bytes(path, bytes);
    EXPECT_THROW(read_feature_map(path), FormatError);
}

TEST(Rfm, RejectsNonZeroPadding) {
    for (std::size_t i : {6, 7, 20}) {
        test::TempDir dir("rfm_pad");
        auto bytes = sample_rfm_bytes();
        bytes[i] = 0xff;
        const auto path = dir.path() / "bad.rfm";
        write_bytes(path, bytes);
        EXPECT_THROW(read_feature_map(path), FormatError) << "byte " << i;
    }
}

TEST(Rfm, RejectsZeroDimension) {
    test::TempDir dir("rfm_zero");
    auto bytes = sample_rfm_bytes();
    bytes[16] = 0; // d = 0
    const auto path = dir.path() / "bad.rfm";
    write_bytes(path, bytes);
    EXPECT_THROW(read_feature_map(path), FormatError);
}

TEST(Rfm, RejectsTruncatedPayload) {
    test::TempDir dir("rfm_trunc");
    auto bytes = sample_rfm_bytes();
    bytes.resize(bytes.size() - 5);
    const auto path = dir.path() / "bad.rfm";
    write_bytes(path, bytes);
    EXPECT_THROW(read_feature_map(path), TruncationError);
}

TEST(Rfm, RejectsTruncatedHeader) {
    test::TempDir dir("rfm_hdr");
    auto bytes = sample_rfm_bytes();
    bytes.resize(10);
    const auto path = dir.path() / "bad.rfm";
    write_bytes(path, bytes);
    EXPECT_THROW(read_feature_map(path), TruncationError);
}

TEST(Rfm, RejectsTrailingBytes) {
    test::TempDir dir("rfm_trail");
    auto bytes = sample_rfm_bytes();
    bytes.push_back(0x00);
    const auto path = dir.path() / "bad.rfm";
    write_bytes(path, bytes);
    EXPECT_THROW(read_feature_map(path), FormatError);
}

TEST(Rfm, RejectsNonFinitePayload) {
    test::TempDir dir("rfm_nan");
    auto bytes = sample_rfm_bytes();
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bytes.data() + 21, &nan, 4);
    const auto path = dir.path() / "bad.rfm";
    write_bytes(path, bytes);
    EXPECT_THROW(read_feature_map(path), DataError);
}

TEST(Rfm, WriteRejectsNonFiniteBeforeTouchingDisk) {
    test::TempDir dir("rfm_wnan");
    const auto path = dir.path() / "never.rfm";
    FeatureMap fm{"never", Domain::Sim, 1, 1, 1,
                  {std::numeric_limits<float>::quiet_NaN()}};
    EXPECT_THROW(write_feature_map(fm, path), DataError);
    EXPECT_FALSE(std::filesystem::exists(path));
}

TEST(Rfm, MissingFileIsIoError) {
    EXPECT_THROW(read_feature_map("/nonexistent/nowhere.rfm"), IoError);
}

TEST(Rfm, RoundTripIsBitExact) {
    test::TempDir dir("rfm_rt");
    test::Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint32_t h = 1 + static_cast<std::uint32_t>(rng() % 6);
        const std::uint32_t w = 1 + static_cast<std::uint32_t>(rng() % 6);
        const std::uint32_t d = 1 + static_cast<std::uint32_t>(rng() % 8);
        const Domain domain = (rng() % 2) ? Domain::Sim : Domain::Real;
        const std::string id = "map" + std::to_string(trial);
        FeatureMap fm = test::random_map(rng, h, w, d, domain, id);
        if (trial % 7 == 0) {
            fm.data[0] = -0.0f; // negative zero must survive
        }
        const auto path = dir.path() / (id + ".rfm");
        write_feature_map(fm, path);

        const FeatureMap back = read_feature_map(path);
        EXPECT_EQ(back.id, fm.id);
        EXPECT_EQ(back.domain, fm.domain);
        EXPECT_EQ(back.height, fm.height);
        EXPECT_EQ(back.width, fm.width);
        EXPECT_EQ(back.dim, fm.dim);
        ASSERT_EQ(back.data.size(), fm.data.size());
        EXPECT_EQ(std::memcmp(back.data.data(), fm.data.data(), 4 * fm.data.size()), 0);

        // write(read(p)) reproduces p byte for byte
        const auto path2 = dir.path() / (id + ".copy.rfm");
        write_feature_map(back, path2);
        EXPECT_EQ(file_bytes(path), file_bytes(path2));
    }
}

TEST(Manifest, ReadsValidManifest) {
    test::TempDir dir("man_ok");
    test::Rng rng(7);
    write_feature_map(test::random_map(rng, 2, 2, 3, Domain::Real, "r1"), dir.path() / "r1.rfm");
    write_feature_map(test::random_map(rng, 2, 2, 3, Domain::Sim, "s1"), dir.path() / "s1.rfm");
    std::ofstream(dir.path() / "manifest.json")
        << R"({"items":[{"id":"r1","path":"r1.rfm","domain":"real"},)"
        << R"({"id":"s1","path":"s1.rfm","domain":"sim"}]})";
    const Manifest m = read_manifest(dir.path() / "manifest.json");
    ASSERT_EQ(m.items.size(), 2u);
    EXPECT_EQ(m.items[0].id, "r1");
    EXPECT_EQ(m.items[1].domain, Domain::Sim);
}

TEST(Manifest, RejectsDuplicateId) {
    test::TempDir dir("man_dup");
    test::Rng rng(8);
    write_feature_map(test::random_map(rng, 1, 1, 2, Domain::Real, "k1"), dir.path() / "a.rfm");
    std::ofstream(dir.path() / "manifest.json")
        << R"({"items":[{"id":"k1","path":"a.rfm","domain":"real"},)"
        << R"({"id":"k1","path":"a.rfm","domain":"real"}]})";
    EXPECT_THROW(read_manifest(dir.path() / "manifest.json"), ManifestError);
}

TEST(Manifest, RejectsMissingFile) {
    test::TempDir dir("man_miss");
    std::ofstream(dir.path() / "manifest.json")
        << R"({"items":[{"id":"gone","path":"gone.rfm","domain":"real"}]})";
    EXPECT_THROW(read_manifest(dir.path() / "manifest.json"), ManifestError);
}

TEST(Manifest, RejectsDomainMismatch) {
    test::TempDir dir("man_dom");
    test::Rng rng(9);
    write_feature_map(test::random_map(rng, 1, 1, 2, Domain::Sim, "s1"), dir.path() / "s1.rfm");
    std::ofstream(dir.path() / "manifest.json")
        << R"({"items":[{"id":"s1","path":"s1.rfm","domain":"real"}]})";
    EXPECT_THROW(read_manifest(dir.path() / "manifest.json"), ManifestError);
}

TEST(Manifest, RejectsMalformedJson) {
    test::TempDir dir("man_json");
    std::ofstream(dir.path() / "manifest.json") << "{not json";
    EXPECT_THROW(read_manifest(dir.path() / "manifest.json"), ManifestError);
    std::ofstream(dir.path() / "noitems.json") << R"({"something":[]})";
    EXPECT_THROW(read_manifest(dir.path() / "noitems.json"), ManifestError);
}

TEST(Manifest, WriteReadRoundTrip) {
    test::TempDir dir("man_rt");
    test::Rng rng(10);
    Manifest m;
    for (int i = 0; i < 5; ++i) {
        const std::string id = "s" + std::to_string(i);
        const auto p = dir.path() / (id + ".rfm");
        write_feature_map(test::random_map(rng, 2, 2, 2, Domain::Sim, id), p);
        m.items.push_back({id, p, Domain::Sim});
    }
    write_manifest(m, dir.path() / "manifest.json");
    const Manifest back = read_manifest(dir.path() / "manifest.json");
    ASSERT_EQ(back.items.size(), m.items.size());
    for (std::size_t i = 0; i < m.items.size(); ++i) {
        EXPECT_EQ(back.items[i].id, m.items[i].id);
        EXPECT_EQ(back.items[i].domain, m.items[i].domain);
    }
}

namespace {

// Minimal npy v1.0 writer for the import-adapter tests.
std::vector<unsigned char> npy_bytes(const std::string& descr, bool fortran,
                                     const std::string& shape,
                                     const std::vector<float>& payload) {
    std::string header = "{'descr': '" + descr + "', 'fortran_order': " +
                         (fortran ? "True" : "False") + ", 'shape': " + shape + ", }";
    const std::size_t total = 10 + header.size();
    const std::size_t padded = (total + 63) / 64 * 64;
    header.resize(header.size() + (padded - total), ' ');
    header.back() = '\n';
    std::vector<unsigned char> bytes;
    const unsigned char magic[8] = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
    bytes.insert(bytes.end(), magic, magic + 8);
    bytes.push_back(static_cast<unsigned char>(header.size() & 0xff));
    bytes.push_back(static_cast<unsigned char>(header.size() >> 8));
    bytes.insert(bytes.end(), header.begin(), header.end());
    const auto* raw = reinterpret_cast<const unsigned char*>(payload.data());
    bytes.insert(bytes.end(), raw, raw + 4 * payload.size());
    return bytes;
}

} // namespace

TEST(NpyImport, DecodesFloat32CArray) {
    test::TempDir dir("npy_ok");
    const std::vector<float> payload{1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f};
    const auto path = dir.path() / "arr.npy";
    write_bytes(path, npy_bytes("<f4", false, "(1, 2, 3)", payload));
    const FeatureMap fm = read_npy_feature_map(path, Domain::Sim);
    EXPECT_EQ(fm.height, 1u);
    EXPECT_EQ(fm.width, 2u);
    EXPECT_EQ(fm.dim, 3u);
    EXPECT_EQ(fm.domain, Domain::Sim);
    EXPECT_EQ(fm.data, payload);
}

TEST(NpyImport, RejectsWrongDtypeOrOrder) {
    test::TempDir dir("npy_bad");
    const std::vector<float> payload(6, 0.0f);
    write_bytes(dir.path() / "f8.npy", npy_bytes("<f8", false, "(1, 2, 3)", payload));
    EXPECT_THROW(read_npy_feature_map(dir.path() / "f8.npy", Domain::Real), FormatError);
    write_bytes(dir.path() / "fortran.npy", npy_bytes("<f4", true, "(1, 2, 3)", payload));
    EXPECT_THROW(read_npy_feature_map(dir.path() / "fortran.npy", Domain::Real), FormatError);
    write_bytes(dir.path() / "2d.npy", npy_bytes("<f4", false, "(2, 3)", payload));
    EXPECT_THROW(read_npy_feature_map(dir.path() / "2d.npy", Domain::Real), FormatError);
    write_bytes(dir.path() / "short.npy", npy_bytes("<f4", false, "(2, 2, 3)", payload));
    EXPECT_THROW(read_npy_feature_map(dir.path() / "short.npy", Domain::Real), TruncationError);
}
