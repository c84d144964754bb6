// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned
// here and nowhere else. Exit status is non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ctaug/artifact.hpp"
#include "ctaug/dataset_stats.hpp"
#include "ctaug/intensity.hpp"
#include "ctaug/metrics.hpp"
#include "ctaug/phantom.hpp"
#include "ctaug/windowing.hpp"
#include "oracles.hpp"

using namespace ctaug;

namespace {

namespace tol {
constexpr double kWindowOracleSeconds = 5.0;
constexpr double kKsMax = 0.05;
constexpr double kContrastEquivalence = 1e-6;
constexpr double kWindowShiftShapeMin = 0.05;
constexpr double kCoverageMin = 0.99;
constexpr double kWilcoxonExact = 1e-12;
constexpr double kFloorShareMin = 0.30;
constexpr double kIqrMinMilli = 20.0;
constexpr double kDemoSeconds = 10.0;
}  // namespace tol

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Volume random_hu_volume(std::mt19937_64& gen, Shape shape, float lo, float hi) {
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> data(shape.count());
    for (auto& x : data) x = dist(gen);
    return Volume(shape, {1.5, 0.8, 0.8}, std::move(data), Units::HU);
}

std::vector<float> to_vector(const Volume& v) { return {v.voxels().begin(), v.voxels().end()}; }

// ---------------------------------------------------------------------------

Outcome window_oracle() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 gen(101);
    std::uniform_real_distribution<double> width(1.0, 2500.0);
    std::uniform_real_distribution<double> level(-800.0, 800.0);
    std::size_t mismatches = 0;
    std::size_t voxels = 0;
    for (int i = 0; i < 100; ++i) {
        const Volume v = random_hu_volume(gen, {8, 32, 32}, -1024.0f, 3071.0f);
        const ViewingWindow w(width(gen), level(gen));
        const ViewingWindow base(169.0, 65.0);
        const std::vector<float> raw = to_vector(v);
        const auto check = [&](const Volume& out, const std::vector<float>& expected) {
            const auto got = to_vector(out);
            for (std::size_t k = 0; k < got.size(); ++k) mismatches += got[k] != expected[k];
            voxels += got.size();
        };
        check(apply_window(v, w, MinMaxSampledWindow{}), oracle::clip_affine(raw, w.lower(), w.upper(), w.lower(),
                                                                             w.upper() - w.lower()));
        check(apply_window(v, w, FixedBaseAffine{base}),
              oracle::clip_affine(raw, w.lower(), w.upper(), base.lower(), base.upper() - base.lower()));
        check(apply_window(v, w, ZScoreGlobal{50.0, 120.0}), oracle::clip_affine(raw, w.lower(), w.upper(), 50.0, 120.0));
    }
    const double secs = seconds_since(t0);
    o.detail << "100 volumes x 3 normalizations, " << voxels << " voxels, " << mismatches << " mismatches, " << secs
             << " s";
    o.require(mismatches == 0, "float equality");
    o.require(secs < tol::kWindowOracleSeconds, "time < 5 s");
    return o;
}

Outcome algorithm_determinism_range() {
    Outcome o;
    const AugmentationSpec spec;  // default ranges, p = 0.3 for both gates
    std::mt19937_64 gen(202);
    const Volume v = random_hu_volume(gen, {4, 24, 24}, -1024.0f, 2000.0f);

    std::size_t out_of_range = 0;
    std::size_t nondeterministic = 0;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        RandomStream a = RandomStream(7).split(k);
        RandomStream b = RandomStream(7).split(k);
        const Volume x = random_windowing(v, spec, a);
        const Volume y = random_windowing(v, spec, b);
        if (!(x == y)) ++nondeterministic;
        for (float f : x.voxels()) out_of_range += !(f >= 0.0f && f <= 1.0f);
    }

    // Gate-passed widths and levels, 10,000 of each.
    std::vector<double> widths;
    std::vector<double> levels;
    RandomStream rng(303);
    while (widths.size() < 10000 || levels.size() < 10000) {
        const SampledWindow s = sample_window(spec, rng);
        if (s.width_was_scaled && widths.size() < 10000) widths.push_back(s.window.width());
        if (s.level_was_shifted && levels.size() < 10000) levels.push_back(s.window.level());
    }
    const double d_w = oracle::ks_uniform(widths, spec.width_min, spec.width_max);
    const double d_l = oracle::ks_uniform(levels, spec.level_min, spec.level_max);

    o.detail << "1000 draws: " << out_of_range << " voxels outside [0,1], " << nondeterministic
             << " non-identical reruns; KS D(W)=" << d_w << " D(L)=" << d_l << " at n=10000";
    o.require(out_of_range == 0, "outputs in [0,1]");
    o.require(nondeterministic == 0, "bit-identical reruns");
    o.require(d_w < tol::kKsMax && d_l < tol::kKsMax, "KS < 0.05");
    return o;
}

Outcome artifact_dichotomy() {
    Outcome o;
    PhantomSpec ps;
    ps.shape = {16, 48, 48};
    const auto [raw, mask] = generate_phantom(ps);
    AugmentationSpec spec;
    const Volume clipped = base_windowing(raw, spec);

    const ArtifactReport add = detect_artifact(clipped, brightness_add(clipped, 0.1));
    const ArtifactReport mul = detect_artifact(clipped, brightness_mult(clipped, 0.9));
    const ArtifactReport con = detect_artifact(clipped, contrast(clipped, 1.25, ImageMeanAnchor{}, false));
    const ArtifactReport con_c = detect_artifact(clipped, contrast(clipped, 1.25, WindowCenterAnchor{0.5}, false));
    o.detail << "additive +0.1: " << (add.any() ? "fires" : "silent") << " (lower " << add.displaced_lower
             << "); multiplicative 0.9: " << (mul.any() ? "fires" : "silent") << " (upper " << mul.displaced_upper
             << "); contrast 1.25: " << (con.any() || con_c.any() ? "fires" : "silent") << " (lower "
             << con.displaced_lower << ", upper " << con.displaced_upper << ")";

    std::size_t rw_fired = 0;
    std::size_t rss_fired = 0;
    AugmentationSpec always = spec;
    always.p_level = 1.0;
    always.p_width = 1.0;
    AugmentationSpec fixed = spec;
    fixed.normalization = NormalizationMode::FixedBaseAffine;
    AugmentationSpec fixed_always = always;
    fixed_always.normalization = NormalizationMode::FixedBaseAffine;
    for (std::uint64_t k = 0; k < 200; ++k) {
        for (const AugmentationSpec* s : {&spec, &always}) {
            RandomStream rng = RandomStream(404).split(k);
            SampledWindow drawn{s->base};
            const Volume out = random_windowing(raw, *s, rng, &drawn);
            rw_fired += detect_window_artifact(raw, out, drawn.window, s->resolved_normalization()).any();
            // Also against the static base clip: air and bone stay saturated.
            rw_fired += detect_artifact(clipped, out).any();
        }
        for (const AugmentationSpec* s : {&fixed, &fixed_always}) {
            RandomStream rng = RandomStream(505).split(k);
            SampledWindow drawn{s->base};
            const Volume out = rw_shift_scale(raw, *s, rng, &drawn);
            rss_fired += detect_window_artifact(raw, out, drawn.window, s->resolved_normalization()).any();
        }
    }
    o.detail << "; random_windowing " << rw_fired << " and rw_shift_scale " << rss_fired
             << " artifacts over 200 draws per gate setting";
    o.require(add.any(), "additive brightness fires");
    o.require(mul.any(), "multiplicative brightness fires");
    o.require(con.any() || con_c.any(),
              "contrast 1.25 fires (expansion moves extremes outward, never inward)");
    o.require(rw_fired == 0, "random_windowing silent");
    o.require(rss_fired == 0, "rw_shift_scale silent");
    return o;
}

Outcome contrast_equivalence() {
    Outcome o;
    std::mt19937_64 gen(606);
    const ViewingWindow base = windows::tumor();
    std::uniform_real_distribution<double> width(129.0, base.width());
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Volume v = random_hu_volume(gen, {4, 24, 24}, -1000.0f, 1000.0f);
        const double w = i == 0 ? base.width() : width(gen);
        const Volume direct = apply_window(v, ViewingWindow(w, base.level()), MinMaxSampledWindow{});
        const Volume affine = apply_window(v, windows::raw(), FixedBaseAffine{base});
        const Volume stretched = contrast(affine, base.width() / w, WindowCenterAnchor{0.5}, false);
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double b = std::clamp(static_cast<double>(stretched[k]), 0.0, 1.0);
            worst = std::max(worst, std::abs(static_cast<double>(direct[k]) - b));
        }
    }
    o.detail << "50 pairs with W <= 169, max abs error " << worst;
    o.require(worst < tol::kContrastEquivalence, "max error < 1e-6");
    return o;
}

Outcome histogram_dichotomy() {
    Outcome o;
    PhantomSpec ps;
    ps.shape = {16, 48, 48};
    const auto [raw, mask] = generate_phantom(ps);
    AugmentationSpec spec;
    const Volume clipped = base_windowing(raw, spec);
    // Bin width 0.05 with edges offset by half a bin, so a +0.1 shift moves
    // every value by exactly two bins.
    const double bw = 0.05;
    const double lo = -0.525;
    const std::size_t bins = 43;
    const double hi = lo + bw * static_cast<double>(bins);
    const Histogram h0 = histogram(clipped, bins, lo, hi);
    const Histogram h1 = histogram(brightness_add(clipped, 0.1), bins, lo, hi);
    const double d_shift = shape_distance(h0, h1);

    PhantomSpec hot;
    hot.shape = {16, 48, 48};
    hot.liver_hu = 160.0;  // just above the base window's upper bound 149.5
    hot.tumor_offsets = {-30.0};
    hot.noise_sigma = 5.0;
    hot.seed = 11;
    const auto [raw_hot, mask_hot] = generate_phantom(hot);
    const Volume base_hot = base_windowing(raw_hot, spec);
    const ViewingWindow shifted(spec.base.width(), spec.base.level() + 40.0);
    const Volume shifted_hot = apply_window(raw_hot, shifted, MinMaxSampledWindow{});
    const double d_window = shape_distance(histogram(base_hot, 50, 0.0, 1.0), histogram(shifted_hot, 50, 0.0, 1.0));

    o.detail << "intensity shift +0.1 (2 bins): distance " << d_shift << "; window shift +40 HU: distance "
             << d_window;
    o.require(d_shift == 0.0, "intensity shift distance == 0");
    o.require(d_window > tol::kWindowShiftShapeMin, "window shift distance > 0.05");
    return o;
}

Outcome stats_coverage() {
    Outcome o;
    std::mt19937_64 gen(707);
    std::uniform_real_distribution<double> liver(60.0, 160.0);
    std::uniform_real_distribution<double> offset(-60.0, 40.0);
    std::uniform_real_distribution<double> sigma(2.0, 30.0);
    double worst = 1.0;
    std::size_t bound_mismatches = 0;
    for (int i = 0; i < 100; ++i) {
        PhantomSpec ps;
        ps.shape = {16, 48, 48};
        ps.liver_hu = liver(gen);
        ps.tumor_offsets = {offset(gen)};
        ps.noise_sigma = sigma(gen);
        ps.seed = gen();
        const auto [v, m] = generate_phantom(ps);
        const CaseWindowEstimate e = case_window(v, m, labels::kTumor, 0.99);

        std::vector<float> values;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (m[k] == labels::kTumor) values.push_back(v[k]);
        }
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();
        const double lower = values[oracle::rank_permille(n, 5) - 1];
        const double upper = values[oracle::rank_permille(n, 995) - 1];
        bound_mismatches += (e.lower_hu != lower) + (e.upper_hu != upper);
        const auto inside =
            std::count_if(values.begin(), values.end(), [&](float x) { return x >= e.lower_hu && x <= e.upper_hu; });
        worst = std::min(worst, static_cast<double>(inside) / static_cast<double>(n));
    }
    o.detail << "100 phantoms, min coverage " << worst << ", " << bound_mismatches << " bound mismatches vs oracle";
    o.require(worst >= tol::kCoverageMin, "coverage >= 0.99");
    o.require(bound_mismatches == 0, "bounds equal sorted-array oracle");
    return o;
}

Outcome difficulty_classifier() {
    Outcome o;
    std::size_t wrong = 0;
    std::size_t total = 0;
    for (double diff : {10.0, 19.9, 20.1, 40.0}) {
        for (double median : {80.0, 89.0, 100.0, 137.0, 150.0}) {
            PhantomSpec ps;
            ps.shape = {16, 48, 48};
            ps.liver_hu = median;
            ps.tumor_offsets = {-diff};
            const auto [v, m] = generate_phantom(ps);
            const DifficultyFlags f = classify_difficulty(v, m);
            const bool low = diff < 20.0;
            const bool poor = median < 89.0 || median > 137.0;
            wrong += (f.low_hu_contrast != low) + (f.poor_ce_timing != poor);
            ++total;
        }
    }
    o.detail << total << " phantoms, " << wrong << " wrong flags";
    o.require(wrong == 0, "flags follow thresholds");
    return o;
}

BinaryMask random_binary(std::mt19937_64& gen, Shape shape, double p) {
    std::bernoulli_distribution on(p);
    BinaryMask m{shape, std::vector<std::uint8_t>(shape.count())};
    for (auto& x : m.voxels) x = on(gen) ? 1 : 0;
    return m;
}

Outcome metrics_oracles() {
    Outcome o;
    std::mt19937_64 gen(808);
    std::size_t dice_bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const BinaryMask p = random_binary(gen, {2, 4, 5}, 0.4);
        const BinaryMask g = random_binary(gen, {2, 4, 5}, 0.4);
        const auto c = oracle::count_overlap(p.voxels, g.voxels);
        const double expected = c.pred + c.gt == 0 ? 1.0 : 2.0 * double(c.both) / double(c.pred + c.gt);
        dice_bad += dice(p, g) != expected;
    }

    std::size_t cc_bad = 0;
    for (int i = 0; i < 200; ++i) {
        const BinaryMask m = random_binary(gen, {10, 10, 10}, 0.3);
        const auto expected = oracle::propagate_components(m.voxels, 10, 10, 10, 3);
        const ComponentLabels got = connected_components(m, Connectivity::Vertex26);
        cc_bad += !std::equal(got.labels.begin(), got.labels.end(), expected.begin(), expected.end());
    }

    // Hand-enumerated lesion fixtures on a 1 x 10 x 10 grid.
    std::size_t lesion_bad = 0;
    auto box = [](BinaryMask& m, std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1) {
        for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) m.voxels[m.shape.index(0, y, x)] = 1;
        }
    };
    const Shape s{1, 10, 10};
    {
        // GT: 10-voxel row; prediction covers exactly 1 voxel (10 %).
        BinaryMask g{s, std::vector<std::uint8_t>(100)};
        BinaryMask p{s, std::vector<std::uint8_t>(100)};
        box(g, 0, 1, 0, 10);
        box(p, 0, 1, 0, 1);
        const auto r = lesion_instance_metrics(p, g);
        // Not detected (needs > 10 %); the prediction lies fully on GT.
        lesion_bad += r.true_positives != 0 || r.false_negatives != 1 || r.false_positives != 0;
        lesion_bad += r.recall != 0.0 || r.precision != 1.0 || r.f1 != 0.0;
    }
    {
        // Two GT lesions, one hit at 2 of 10 voxels, plus one spurious component.
        BinaryMask g{s, std::vector<std::uint8_t>(100)};
        BinaryMask p{s, std::vector<std::uint8_t>(100)};
        box(g, 0, 1, 0, 10);
        box(g, 5, 7, 5, 7);
        box(p, 0, 1, 0, 2);
        box(p, 9, 10, 0, 3);
        const auto r = lesion_instance_metrics(p, g);
        lesion_bad += r.true_positives != 1 || r.false_negatives != 1 || r.false_positives != 1;
        lesion_bad += r.recall != 0.5 || r.precision != 0.5 || r.f1 != 0.5;
    }
    {
        BinaryMask empty{s, std::vector<std::uint8_t>(100)};
        const auto r = lesion_instance_metrics(empty, empty);
        lesion_bad += r.f1 != 1.0 || r.recall != 1.0 || r.precision != 1.0;
    }

    std::size_t wilcoxon_bad = 0;
    double worst = 0.0;
    std::uniform_int_distribution<int> small(-5, 5);
    for (std::size_t n = 1; n <= 12; ++n) {
        for (int rep = 0; rep < 25; ++rep) {
            std::vector<double> a(n);
            std::vector<double> b(n);
            std::vector<double> d(n);
            for (std::size_t k = 0; k < n; ++k) {
                a[k] = small(gen);
                b[k] = small(gen);
                d[k] = a[k] - b[k];
            }
            const double err = std::abs(wilcoxon_signed_rank(a, b).p_value - oracle::wilcoxon_enumerate(d));
            worst = std::max(worst, err);
            wilcoxon_bad += err > tol::kWilcoxonExact;
        }
    }
    o.detail << "dice " << dice_bad << "/1000 off, components " << cc_bad << "/200 off, lesion fixtures "
             << lesion_bad << " off, Wilcoxon n<=12 worst |dp| " << worst;
    o.require(dice_bad == 0, "dice exact");
    o.require(cc_bad == 0, "components match flood fill");
    o.require(lesion_bad == 0, "lesion fixtures");
    o.require(wilcoxon_bad == 0, "Wilcoxon exact to 1e-12");
    return o;
}

Outcome mechanism_demo() {
    Outcome o;
    const auto t0 = Clock::now();
    PhantomSpec ps;
    ps.shape = {24, 64, 64};
    ps.liver_hu = 40.0;
    ps.ce_offset = -60.0;  // liver lands at -20 HU, just under the floor -19.5
    ps.noise_sigma = 10.0;
    ps.seed = 1;
    const auto [raw, mask] = generate_phantom(ps);

    AugmentationSpec spec;
    const Volume base = base_windowing(raw, spec);
    const ViewingWindow shifted(spec.base.width(), spec.level_min);
    const Volume moved = apply_window(raw, shifted, MinMaxSampledWindow{});

    std::vector<double> liver_base;
    std::vector<double> liver_moved;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        if (mask[k] != labels::kLiver) continue;
        liver_base.push_back(base[k]);
        liver_moved.push_back(moved[k]);
    }
    const double floor_share =
        static_cast<double>(std::count(liver_base.begin(), liver_base.end(), 0.0)) / static_cast<double>(liver_base.size());
    auto iqr_milli = [](std::vector<double> xs) {
        std::sort(xs.begin(), xs.end());
        return 1000.0 * (quantile_nearest_rank(xs, 0.75) - quantile_nearest_rank(xs, 0.25));
    };
    const double iqr_base = iqr_milli(liver_base);
    const double iqr_moved = iqr_milli(liver_moved);
    const double secs = seconds_since(t0);
    o.detail << liver_base.size() << " liver voxels; base window: " << 100.0 * floor_share
             << " % at floor, IQR " << iqr_base << " milli; window L=" << shifted.level() << " W=" << shifted.width()
             << ": IQR " << iqr_moved << " milli; " << secs << " s";
    o.require(floor_share >= tol::kFloorShareMin, ">= 30 % of liver at floor");
    o.require(iqr_moved > tol::kIqrMinMilli, "IQR > 20 milli after shift");
    o.require(secs < tol::kDemoSeconds, "time < 10 s");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"windowing oracle", window_oracle},
        {"random windowing determinism and range", algorithm_determinism_range},
        {"artifact dichotomy", artifact_dichotomy},
        {"contrast equivalence", contrast_equivalence},
        {"histogram shape dichotomy", histogram_dichotomy},
        {"stats coverage", stats_coverage},
        {"difficulty classifier", difficulty_classifier},
        {"metrics oracles", metrics_oracles},
        {"mechanism demo", mechanism_demo},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        failed += !o.pass;
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
