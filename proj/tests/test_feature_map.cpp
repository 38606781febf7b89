#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "otfeat/feature_map.hpp"
#include "testutil.hpp"

using namespace otfeat;

TEST(FeatureMap, ValidateAcceptsWellFormedMap) {
    FeatureMap fm{"a", Domain::Real, 2, 3, 4, std::vector<float>(24, 0.5f)};
    EXPECT_NO_THROW(validate(fm));
}

TEST(FeatureMap, ValidateRejectsZeroDims) {
    FeatureMap fm{"a", Domain::Real, 0, 3, 4, {}};
    EXPECT_THROW(validate(fm), ShapeError);
}

TEST(FeatureMap, ValidateRejectsWrongDataLength) {
    FeatureMap fm{"a", Domain::Real, 2, 2, 1, std::vector<float>(3, 0.0f)};
    EXPECT_THROW(validate(fm), ShapeError);
}

TEST(FeatureMap, ValidateRejectsNonFinite) {
    FeatureMap fm{"a", Domain::Real, 1, 2, 1,
                  {1.0f, std::numeric_limits<float>::quiet_NaN()}};
    EXPECT_THROW(validate(fm), DataError);
    fm.data[1] = std::numeric_limits<float>::infinity();
    EXPECT_THROW(validate(fm), DataError);
}

TEST(AvgPool, FactorOneIsIdentity) {
    test::Rng rng(1);
    const FeatureMap fm = test::random_map(rng, 3, 5, 4);
    const FeatureMap pooled = avg_pool(fm, 1);
    EXPECT_EQ(pooled.height, fm.height);
    EXPECT_EQ(pooled.width, fm.width);
    EXPECT_EQ(pooled.dim, fm.dim);
    EXPECT_EQ(pooled.data, fm.data);
}

TEST(AvgPool, TwoByTwoBlockMean) {
    FeatureMap fm{"a", Domain::Real, 2, 2, 1, {1.0f, 2.0f, 3.0f, 4.0f}};
    const FeatureMap pooled = avg_pool(fm, 2);
    EXPECT_EQ(pooled.height, 1u);
    EXPECT_EQ(pooled.width, 1u);
    EXPECT_EQ(pooled.dim, 1u);
    ASSERT_EQ(pooled.data.size(), 1u);
    EXPECT_FLOAT_EQ(pooled.data[0], 2.5f);
}

TEST(AvgPool, RejectsNonDivisibleFactor) {
    test::Rng rng(2);
    const FeatureMap fm = test::random_map(rng, 4, 4, 2);
    EXPECT_THROW(avg_pool(fm, 3), PoolError);
    EXPECT_THROW(avg_pool(fm, 0), PoolError);
}

TEST(AvgPool, PreservesGlobalMean) {
    test::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng() % 3);
        const std::uint32_t h = k * (1 + static_cast<std::uint32_t>(rng() % 4));
        const std::uint32_t w = k * (1 + static_cast<std::uint32_t>(rng() % 4));
        const std::uint32_t d = 1 + static_cast<std::uint32_t>(rng() % 5);
        const FeatureMap fm = test::random_map(rng, h, w, d);
        const FeatureMap pooled = avg_pool(fm, k);
        const std::vector<double> before = mean_vector(fm);
        const std::vector<double> after = mean_vector(pooled);
        for (std::uint32_t c = 0; c < d; ++c) {
            EXPECT_NEAR(before[c], after[c], 1e-5);
        }
    }
}

TEST(AvgPool, ChannelsPoolIndependently) {
    // 2x2 grid, d=2: channel 0 holds 1,2,3,4 and channel 1 holds 10,20,30,40.
    FeatureMap fm{"a", Domain::Sim, 2, 2, 2, {1, 10, 2, 20, 3, 30, 4, 40}};
    const FeatureMap pooled = avg_pool(fm, 2);
    ASSERT_EQ(pooled.data.size(), 2u);
    EXPECT_FLOAT_EQ(pooled.data[0], 2.5f);
    EXPECT_FLOAT_EQ(pooled.data[1], 25.0f);
}

TEST(MeanVector, MatchesHandComputation) {
    FeatureMap fm{"a", Domain::Real, 1, 2, 2, {1.0f, 2.0f, 3.0f, 6.0f}};
    const std::vector<double> mean = mean_vector(fm);
    ASSERT_EQ(mean.size(), 2u);
    EXPECT_DOUBLE_EQ(mean[0], 2.0);
    EXPECT_DOUBLE_EQ(mean[1], 4.0);
}
