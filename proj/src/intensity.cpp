#include "ctaug/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ctaug/error.hpp"

namespace ctaug {

std::string_view to_string(TransformKind kind) {
    switch (kind) {
        case TransformKind::Contrast: return "contrast";
        case TransformKind::BrightnessMultiplicative: return "brightness_multiplicative";
        case TransformKind::BrightnessAdditive: return "brightness_additive";
        case TransformKind::Gamma: return "gamma";
        case TransformKind::GammaInverse: return "gamma_inverse";
    }
    return "contrast";
}

TransformKind transform_kind_from_string(std::string_view name) {
    if (name == "contrast") return TransformKind::Contrast;
    if (name == "brightness_multiplicative") return TransformKind::BrightnessMultiplicative;
    if (name == "brightness_additive") return TransformKind::BrightnessAdditive;
    if (name == "gamma") return TransformKind::Gamma;
    if (name == "gamma_inverse") return TransformKind::GammaInverse;
    throw ValidationError("unknown transform kind '" + std::string(name) + "'");
}

namespace {

// Keeps the input tag unless values left [0, 1] on normalized data.
Units result_units(Units in, const std::vector<float>& voxels) {
    if (in != Units::Normalized01) return in;
    const bool inside = std::all_of(voxels.begin(), voxels.end(), [](float x) { return x >= 0.0f && x <= 1.0f; });
    return inside ? Units::Normalized01 : Units::Rescaled;
}

template <class Fn>
Volume map_voxels(const Volume& v, Fn fn) {
    std::vector<float> out(v.size());
    std::transform(v.voxels().begin(), v.voxels().end(), out.begin(),
                   [&](float x) { return static_cast<float>(fn(static_cast<double>(x))); });
    const Units units = result_units(v.units(), out);
    return v.with_voxels(std::move(out), units);
}

double mean_of(std::span<const float> xs) {
    const double sum = std::accumulate(xs.begin(), xs.end(), 0.0, [](double acc, float x) { return acc + x; });
    return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

}  // namespace

Volume contrast(const Volume& v, double alpha, const Anchor& anchor, bool preserve_range) {
    if (alpha == 1.0) return v;
    const double center = std::holds_alternative<ImageMeanAnchor>(anchor)
                              ? mean_of(v.voxels())
                              : std::get<WindowCenterAnchor>(anchor).value;
    if (!preserve_range) {
        return map_voxels(v, [&](double x) { return center + alpha * (x - center); });
    }
    const auto [lo_it, hi_it] = std::minmax_element(v.voxels().begin(), v.voxels().end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    return map_voxels(v, [&](double x) { return std::clamp(center + alpha * (x - center), lo, hi); });
}

Volume brightness_mult(const Volume& v, double factor, bool clip01) {
    return map_voxels(v, [&](double x) {
        const double y = factor * x;
        return clip01 ? std::clamp(y, 0.0, 1.0) : y;
    });
}

Volume brightness_add(const Volume& v, double offset, bool clip01) {
    return map_voxels(v, [&](double x) {
        const double y = x + offset;
        return clip01 ? std::clamp(y, 0.0, 1.0) : y;
    });
}

Volume gamma(const Volume& v, double g, bool inverse) {
    if (!(g > 0.0)) throw PreconditionError("gamma exponent must be > 0");
    if (g == 1.0) return v;
    const auto [lo_it, hi_it] = std::minmax_element(v.voxels().begin(), v.voxels().end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi == lo) return v;
    const double span = hi - lo;
    return map_voxels(v, [&](double x) {
        const double t = std::clamp((x - lo) / span, 0.0, 1.0);
        const double y = inverse ? 1.0 - std::pow(1.0 - t, g) : std::pow(t, g);
        return lo + y * span;
    });
}

void IntensityTransform::validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw ValidationError("transform range must be finite");
    if (lo > hi) throw ValidationError(std::string(to_string(kind)) + ": range lo must be <= hi");
    if (probability < 0.0 || probability > 1.0) {
        throw ValidationError(std::string(to_string(kind)) + ": probability must be in [0, 1]");
    }
    if ((kind == TransformKind::Gamma || kind == TransformKind::GammaInverse) && !(lo > 0.0)) {
        throw ValidationError(std::string(to_string(kind)) + ": range must be strictly positive");
    }
}

Volume IntensityTransform::apply(const Volume& v, double parameter) const {
    switch (kind) {
        case TransformKind::Contrast: return contrast(v, parameter, anchor, preserve_range);
        case TransformKind::BrightnessMultiplicative: return brightness_mult(v, parameter, preserve_range);
        case TransformKind::BrightnessAdditive: return brightness_add(v, parameter, preserve_range);
        case TransformKind::Gamma: return gamma(v, parameter, false);
        case TransformKind::GammaInverse: return gamma(v, parameter, true);
    }
    return v;
}

void Pipeline::validate() const {
    if (transforms.empty() && !identity) {
        throw ValidationError("pipeline has no transforms and is not marked as identity");
    }
    for (const auto& t : transforms) t.validate();
}

Volume run_pipeline(const Volume& v, const Pipeline& pipeline, RandomStream& rng) {
    pipeline.validate();
    Volume current = v;
    for (const auto& t : pipeline.transforms) {
        if (rng.uniform() < t.probability) {
            const double parameter = uniform_between(rng, t.lo, t.hi);
            current = t.apply(current, parameter);
        }
    }
    return current;
}

Pipeline preset_nnunet() {
    Pipeline p;
    p.transforms = {
        {TransformKind::Contrast, 0.75, 1.25, 0.15, ImageMeanAnchor{}, true},
        {TransformKind::BrightnessMultiplicative, 0.75, 1.25, 0.15, ImageMeanAnchor{}, false},
        {TransformKind::Gamma, 0.7, 1.5, 0.3, ImageMeanAnchor{}, false},
        {TransformKind::GammaInverse, 0.7, 1.5, 0.1, ImageMeanAnchor{}, false},
    };
    return p;
}

Pipeline preset_unetr() {
    Pipeline p;
    p.transforms = {
        {TransformKind::BrightnessAdditive, -0.1, 0.1, 0.5, ImageMeanAnchor{}, false},
        {TransformKind::BrightnessMultiplicative, 0.9, 1.1, 0.1, ImageMeanAnchor{}, false},
    };
    return p;
}

Pipeline equal_strength_shift_scale(double level_min, double level_max, double width_min, double width_max,
                                    double base_level, double base_width, double global_std,
                                    double probability) {
    if (!(global_std > 0.0)) throw PreconditionError("global std must be > 0");
    if (!(base_width > 0.0)) throw PreconditionError("base width must be > 0");
    Pipeline p;
    p.transforms = {
        {TransformKind::BrightnessAdditive, (level_min - base_level) / global_std,
         (level_max - base_level) / global_std, probability, ImageMeanAnchor{}, false},
        {TransformKind::BrightnessMultiplicative, width_min / base_width, width_max / base_width, probability,
         ImageMeanAnchor{}, false},
    };
    p.validate();
    return p;
}

}  // namespace ctaug
