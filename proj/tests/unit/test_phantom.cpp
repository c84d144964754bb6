#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ctaug/error.hpp"
#include "ctaug/phantom.hpp"
#include "ctaug/rng.hpp"

namespace ctaug {
namespace {

PhantomSpec small_spec() {
    PhantomSpec spec;
    spec.shape = {12, 48, 48};
    return spec;
}

TEST(PhantomTest, NoiseFreeHuIsExactPerLabel) {
    PhantomSpec spec = small_spec();
    spec.tumor_offsets = {-30.0};
    const auto [v, m] = generate_phantom(spec);
    ASSERT_GT(m.count(labels::kLiver), 0u);
    ASSERT_GT(m.count(labels::kTumor), 0u);
    std::set<float> background;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (m[i] == labels::kLiver) EXPECT_EQ(v[i], 110.0f);
        if (m[i] == labels::kTumor) EXPECT_EQ(v[i], 80.0f);
        if (m[i] == labels::kBackground) background.insert(v[i]);
    }
    EXPECT_EQ(background, (std::set<float>{-1000.0f, 40.0f, 700.0f}));
}

TEST(PhantomTest, CeOffsetShiftsLiverAndTumorOnly) {
    PhantomSpec spec = small_spec();
    const auto [a, ma] = generate_phantom(spec);
    spec.ce_offset = 60.0;
    const auto [b, mb] = generate_phantom(spec);
    EXPECT_EQ(ma, mb);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const float expected = ma[i] == labels::kBackground ? a[i] : a[i] + 60.0f;
        EXPECT_EQ(b[i], expected);
    }
}

TEST(PhantomTest, NoiseHasTheRequestedMoments) {
    PhantomSpec spec = small_spec();
    spec.noise_sigma = 10.0;
    spec.seed = 17;
    const auto [v, m] = generate_phantom(spec);
    double sum = 0.0;
    double sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (m[i] != labels::kLiver) continue;
        const double r = v[i] - 110.0;
        sum += r;
        sum2 += r * r;
        ++n;
    }
    ASSERT_GT(n, 1000u);
    const double mean = sum / static_cast<double>(n);
    EXPECT_NEAR(mean, 0.0, 3.0 * 10.0 / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(std::sqrt(sum2 / static_cast<double>(n)), 10.0, 0.5);
}

TEST(PhantomTest, SameSeedSameVolumeDifferentSeedDifferentNoise) {
    PhantomSpec spec = small_spec();
    spec.noise_sigma = 5.0;
    spec.seed = 3;
    const auto a = generate_phantom(spec);
    const auto b = generate_phantom(spec);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    spec.seed = 4;
    const auto c = generate_phantom(spec);
    EXPECT_NE(a.first, c.first);
    EXPECT_EQ(a.second, c.second);
}

TEST(PhantomTest, SliceNoiseComesFromItsOwnStream) {
    PhantomSpec spec = small_spec();
    spec.noise_sigma = 5.0;
    spec.seed = 8;
    const auto [v, m] = generate_phantom(spec);
    const std::size_t z = 5;
    const std::size_t slice = spec.shape.y * spec.shape.x;
    RandomStream rng = RandomStream(spec.seed).split(z);
    const auto tissues = tissue_hu(spec);
    const auto [n0, n1] = rng.normal_pair();
    (void)n1;
    // Voxel (z, 0, 0) is air in the corner of the field of view.
    EXPECT_EQ(v[z * slice], static_cast<float>(tissues.air + spec.noise_sigma * n0));
}

TEST(PhantomTest, MultipleTumorsAreSeparateAndLabeled) {
    PhantomSpec spec;
    spec.tumor_offsets = {-30.0, -10.0, 20.0};
    const auto [v, m] = generate_phantom(spec);
    std::set<float> tumor_values;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (m[i] == labels::kTumor) tumor_values.insert(v[i]);
    }
    EXPECT_EQ(tumor_values, (std::set<float>{80.0f, 100.0f, 130.0f}));
    EXPECT_EQ(spec.resolved_tumors().size(), 3u);
}

TEST(PhantomTest, NoTumorOffsetsMeansNoTumorLabel) {
    PhantomSpec spec = small_spec();
    spec.tumor_offsets.clear();
    const auto [v, m] = generate_phantom(spec);
    EXPECT_EQ(m.count(labels::kTumor), 0u);
    EXPECT_GT(m.count(labels::kLiver), 0u);
}

TEST(PhantomTest, TissueHuTable) {
    PhantomSpec spec;
    spec.ce_offset = -60.0;
    spec.liver_hu = 40.0;
    const PhantomTissues t = tissue_hu(spec);
    EXPECT_EQ(t.liver, -20.0);
    EXPECT_EQ(t.tumors.at(0), -50.0);
    EXPECT_EQ(t.body, 40.0);
}

TEST(PhantomValidationTest, RejectsBrokenSpecs) {
    auto broken = [](auto mutate) {
        PhantomSpec s = small_spec();
        mutate(s);
        return s;
    };
    EXPECT_THROW(broken([](auto& s) { s.noise_sigma = -1.0; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.liver_hu = std::nan(""); }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.bone_inner = 0.95; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.liver.radii = {0.4, 0.45, 0.45}; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.body.center = {0.5, 0.5, 0.9}; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.tumors = {TumorSphere{{0.5, 0.45, 0.4}, 5.0}, TumorSphere{}}; }).validate(),
                 ValidationError);
    // A tumor reaching past the liver boundary.
    EXPECT_THROW(broken([](auto& s) { s.tumors = {TumorSphere{{0.5, 0.45, 0.4}, 40.0}}; }).validate(),
                 ValidationError);
    // A tumor smaller than a voxel placed between voxel centers.
    EXPECT_THROW(broken([](auto& s) { s.tumors = {TumorSphere{{0.5, 0.5, 0.5}, 0.1}}; })
                     .validate(),
                 ValidationError);
    EXPECT_NO_THROW(small_spec().validate());
}

TEST(PhantomTest, SingleSliceIsValid) {
    PhantomSpec spec;
    spec.shape = {1, 64, 64};
    spec.liver.center = {0.5, 0.45, 0.4};
    spec.liver.radii = {0.5, 0.25, 0.25};
    spec.body.radii = {0.5, 0.46, 0.48};
    const auto [v, m] = generate_phantom(spec);
    EXPECT_GT(m.count(labels::kTumor), 0u);
}

}  // namespace
}  // namespace ctaug
