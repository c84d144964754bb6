#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ctaug/error.hpp"
#include "ctaug/intensity.hpp"
#include "ctaug/windowing.hpp"
#include "oracles.hpp"

namespace ctaug {
namespace {

struct ScriptedSource {
    std::vector<double> values;
    std::size_t next = 0;
    double uniform() { return values.at(next++); }
};

Volume random_hu(std::uint32_t seed, Shape shape = {3, 8, 8}) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> dist(-1024.0f, 1500.0f);
    std::vector<float> data(shape.count());
    for (auto& x : data) x = dist(gen);
    return Volume(shape, {2.0, 0.8, 0.8}, data, Units::HU);
}

std::vector<float> as_vector(const Volume& v) { return {v.voxels().begin(), v.voxels().end()}; }

TEST(ApplyWindowTest, MinMaxMatchesOracle) {
    for (std::uint32_t seed = 0; seed < 20; ++seed) {
        const Volume v = random_hu(seed);
        const ViewingWindow w(169.0 + seed, 65.0 - seed);
        const Volume out = apply_window(v, w, MinMaxSampledWindow{});
        EXPECT_EQ(as_vector(out), oracle::clip_affine(as_vector(v), w.lower(), w.upper(), w.lower(), w.width()));
        EXPECT_EQ(out.units(), Units::Normalized01);
    }
}

TEST(ApplyWindowTest, MinMaxSendsBoundsExactlyToZeroAndOne) {
    const ViewingWindow w(169.0, 65.0);
    const Volume v({1, 1, 5}, {}, {-2000.0f, -19.5f, 65.0f, 149.5f, 3000.0f}, Units::HU);
    const Volume out = apply_window(v, w, MinMaxSampledWindow{});
    EXPECT_EQ(out[0], 0.0f);
    EXPECT_EQ(out[1], 0.0f);
    EXPECT_EQ(out[2], 0.5f);
    EXPECT_EQ(out[3], 1.0f);
    EXPECT_EQ(out[4], 1.0f);
}

TEST(ApplyWindowTest, FixedBaseAffineKeepsSurvivingValues) {
    const ViewingWindow base(169.0, 65.0);
    const Volume v = random_hu(5);
    const Volume a = apply_window(v, ViewingWindow(129.0, 50.0), FixedBaseAffine{base});
    const Volume b = apply_window(v, ViewingWindow(150.0, 70.0), FixedBaseAffine{base});
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double hu = v[i];
        if (hu >= -5.0 && hu <= 114.5) EXPECT_EQ(a[i], b[i]) << hu;
    }
    EXPECT_EQ(a.units(), Units::Normalized01);
    EXPECT_EQ(as_vector(a), oracle::clip_affine(as_vector(v), -14.5, 114.5, base.lower(), base.width()));
}

TEST(ApplyWindowTest, FixedBaseAffineWiderWindowIsRescaled) {
    const ViewingWindow base(169.0, 65.0);
    const Volume v = random_hu(6);
    const Volume out = apply_window(v, ViewingWindow(298.0, 65.0), FixedBaseAffine{base});
    EXPECT_EQ(out.units(), Units::Rescaled);
    const auto [lo, hi] = std::minmax_element(out.voxels().begin(), out.voxels().end());
    EXPECT_LT(*lo, 0.0f);
    EXPECT_GT(*hi, 1.0f);
}

TEST(ApplyWindowTest, ZScoreUsesGlobalStatistics) {
    const Volume v = random_hu(7);
    const ViewingWindow w(400.0, 40.0);
    const Volume out = apply_window(v, w, ZScoreGlobal{60.0, 50.0});
    EXPECT_EQ(out.units(), Units::ZScore);
    EXPECT_EQ(as_vector(out), oracle::clip_affine(as_vector(v), w.lower(), w.upper(), 60.0, 50.0));
}

TEST(ApplyWindowTest, RequiresHuInput) {
    const Volume v({1, 1, 1}, {}, {0.5f}, Units::Normalized01);
    EXPECT_THROW(apply_window(v, windows::tumor(), MinMaxSampledWindow{}), PreconditionError);
}

TEST(ApplyWindowTest, PreservesGeometry) {
    const Volume v = random_hu(8, {2, 3, 4});
    const Volume out = apply_window(v, windows::liver(), MinMaxSampledWindow{});
    EXPECT_EQ(out.shape(), v.shape());
    EXPECT_EQ(out.spacing(), v.spacing());
}

TEST(NormalizedIntervalTest, MatchesTheImageOfTheBounds) {
    const ViewingWindow base(169.0, 65.0);
    const Interval mm = normalized_interval(ViewingWindow(300.0, 10.0), MinMaxSampledWindow{});
    EXPECT_EQ(mm.lo, 0.0);
    EXPECT_EQ(mm.hi, 1.0);
    const Interval fb = normalized_interval(ViewingWindow(129.0, 65.0), FixedBaseAffine{base});
    EXPECT_NEAR(fb.lo, 20.0 / 169.0, 1e-7);
    EXPECT_NEAR(fb.hi, 149.0 / 169.0, 1e-7);
}

TEST(NormalizedIntervalTest, EqualsSaturatedVoxelsBitForBit) {
    const ViewingWindow base(169.0, 65.0);
    const Volume v({1, 1, 2}, {1.0, 1.0, 1.0}, {-5000.0f, 5000.0f}, Units::HU);
    RandomStream rng(12);
    for (int i = 0; i < 500; ++i) {
        const double width = uniform_between(rng, 1.0, 400.0);
        const ViewingWindow w(width, uniform_between(rng, -100.0, 200.0));
        for (const Normalization& n : {Normalization{FixedBaseAffine{base}}, Normalization{ZScoreGlobal{61.0, 37.0}}}) {
            const Volume out = apply_window(v, w, n);
            const Interval iv = normalized_interval(w, n);
            EXPECT_EQ(out[0], iv.lo);
            EXPECT_EQ(out[1], iv.hi);
        }
    }
}

TEST(SampleWindowTest, DrawOrderIsWidthGateWidthLevelGateLevel) {
    AugmentationSpec spec;
    ScriptedSource both{{0.1, 0.5, 0.2, 0.25}};
    const SampledWindow s = sample_window(spec, both);
    EXPECT_TRUE(s.width_was_scaled);
    EXPECT_TRUE(s.level_was_shifted);
    EXPECT_EQ(s.draws_consumed, 4);
    EXPECT_DOUBLE_EQ(s.window.width(), 129.0 + 0.5 * (298.0 - 129.0));
    EXPECT_DOUBLE_EQ(s.window.level(), 12.0 + 0.25 * (130.0 - 12.0));
}

TEST(SampleWindowTest, FailedGatesKeepBaseValuesAndSkipDraws) {
    AugmentationSpec spec;
    ScriptedSource none{{0.3, 0.9}};
    const SampledWindow s = sample_window(spec, none);
    EXPECT_FALSE(s.width_was_scaled);
    EXPECT_FALSE(s.level_was_shifted);
    EXPECT_EQ(s.draws_consumed, 2);
    EXPECT_EQ(s.window, spec.base);

    ScriptedSource level_only{{0.95, 0.1, 0.0}};
    const SampledWindow t = sample_window(spec, level_only);
    EXPECT_FALSE(t.width_was_scaled);
    EXPECT_TRUE(t.level_was_shifted);
    EXPECT_EQ(t.draws_consumed, 3);
    EXPECT_EQ(t.window.width(), 169.0);
    EXPECT_DOUBLE_EQ(t.window.level(), 12.0);
}

TEST(SampleWindowTest, GateBoundaryIsStrict) {
    AugmentationSpec spec;
    spec.p_width = 0.3;
    ScriptedSource at_p{{0.3, 0.5}};
    EXPECT_FALSE(sample_window(spec, at_p).width_was_scaled);
}

TEST(SampleWindowTest, ProbabilityOneAlwaysAndZeroNever) {
    AugmentationSpec spec;
    spec.p_level = 1.0;
    spec.p_width = 0.0;
    RandomStream rng(1);
    for (int i = 0; i < 200; ++i) {
        const SampledWindow s = sample_window(spec, rng);
        EXPECT_TRUE(s.level_was_shifted);
        EXPECT_FALSE(s.width_was_scaled);
    }
}

TEST(RandomWindowingTest, OutputInUnitIntervalAndWindowInRange) {
    AugmentationSpec spec;
    spec.p_level = 0.5;
    spec.p_width = 0.5;
    RandomStream rng(99);
    const Volume v = random_hu(9);
    for (int i = 0; i < 200; ++i) {
        SampledWindow s{spec.base};
        const Volume out = random_windowing(v, spec, rng, &s);
        EXPECT_GE(s.window.width(), spec.width_min);
        EXPECT_LT(s.window.width(), spec.width_max);
        EXPECT_GE(s.window.level(), spec.level_min);
        EXPECT_LT(s.window.level(), spec.level_max);
        for (float x : out.voxels()) {
            ASSERT_GE(x, 0.0f);
            ASSERT_LE(x, 1.0f);
        }
    }
}

TEST(RandomWindowingTest, SameSeedIsBitIdentical) {
    AugmentationSpec spec;
    const Volume v = random_hu(10);
    RandomStream a(2024);
    RandomStream b(2024);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(random_windowing(v, spec, a), random_windowing(v, spec, b));
}

TEST(RandomWindowingTest, RejectsInvalidSpec) {
    AugmentationSpec spec;
    spec.level_min = 200.0;
    RandomStream rng(0);
    EXPECT_THROW(random_windowing(random_hu(1), spec, rng), ValidationError);
}

TEST(RwShiftScaleTest, RefusesMinMaxNormalization) {
    AugmentationSpec spec;
    RandomStream rng(0);
    EXPECT_THROW(rw_shift_scale(random_hu(1), spec, rng), ValidationError);
    spec.normalization = NormalizationMode::FixedBaseAffine;
    EXPECT_NO_THROW(rw_shift_scale(random_hu(1), spec, rng));
}

TEST(RwShiftScaleTest, NarrowerWindowOnlyRemovesValues) {
    AugmentationSpec spec;
    spec.normalization = NormalizationMode::FixedBaseAffine;
    spec.width_max = 169.0;
    spec.p_width = 1.0;
    spec.p_level = 0.0;
    const Volume v = random_hu(12);
    const Volume base = base_windowing(v, spec);
    RandomStream rng(3);
    SampledWindow s{spec.base};
    const Volume out = rw_shift_scale(v, spec, rng, &s);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (s.window.contains(v[i])) EXPECT_EQ(out[i], base[i]);
    }
}

TEST(AugmentationSpecTest, ValidationCatchesEachInvariant) {
    EXPECT_NO_THROW(AugmentationSpec{}.validate());
    auto broken = [](auto mutate) {
        AugmentationSpec s;
        mutate(s);
        return s;
    };
    EXPECT_THROW(broken([](auto& s) { s.level_min = 131.0; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.width_min = 300.0; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.width_min = 170.0; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.width_max = 160.0; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.p_level = 1.5; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) { s.p_width = -0.1; }).validate(), ValidationError);
    EXPECT_THROW(broken([](auto& s) {
                     s.normalization = NormalizationMode::ZScoreGlobal;
                     s.zscore.std = 0.0;
                 }).validate(),
                 ValidationError);
}

TEST(AugmentationSpecTest, DefaultsAreTheTumorWindowAndRanges) {
    const AugmentationSpec s;
    EXPECT_EQ(s.base, windows::tumor());
    EXPECT_EQ(s.level_min, 12.0);
    EXPECT_EQ(s.level_max, 130.0);
    EXPECT_EQ(s.width_min, 129.0);
    EXPECT_EQ(s.width_max, 298.0);
}

TEST(NormalizationModeTest, NamesRoundTrip) {
    for (auto m : {NormalizationMode::MinMaxSampledWindow, NormalizationMode::FixedBaseAffine,
                   NormalizationMode::ZScoreGlobal}) {
        EXPECT_EQ(normalization_mode_from_string(to_string(m)), m);
    }
    EXPECT_THROW(normalization_mode_from_string("minmax"), ValidationError);
}

// Narrowing the window at a fixed level equals contrast on the base clip
// with alpha = W_base / W anchored at the window center, then clamped.
TEST(WindowContrastEquivalenceTest, NarrowWindowEqualsAnchoredContrast) {
    const ViewingWindow base = windows::tumor();
    const Volume v = random_hu(13);
    for (double w : {129.0, 140.0, 160.0, 169.0}) {
        const Volume direct = apply_window(v, ViewingWindow(w, base.level()), MinMaxSampledWindow{});
        const Volume clipped = apply_window(v, windows::raw(), FixedBaseAffine{base});
        const Volume stretched = contrast(clipped, base.width() / w, WindowCenterAnchor{0.5}, false);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double expected = std::clamp(static_cast<double>(stretched[i]), 0.0, 1.0);
            EXPECT_NEAR(direct[i], expected, 1e-6);
        }
    }
}

}  // namespace
}  // namespace ctaug
