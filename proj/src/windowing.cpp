#include "ctaug/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ctaug/error.hpp"

namespace ctaug {

std::string_view to_string(NormalizationMode mode) {
    switch (mode) {
        case NormalizationMode::MinMaxSampledWindow: return "minmax_sampled_window";
        case NormalizationMode::FixedBaseAffine: return "fixed_base_affine";
        case NormalizationMode::ZScoreGlobal: return "zscore_global";
    }
    return "minmax_sampled_window";
}

NormalizationMode normalization_mode_from_string(std::string_view name) {
    if (name == "minmax_sampled_window") return NormalizationMode::MinMaxSampledWindow;
    if (name == "fixed_base_affine") return NormalizationMode::FixedBaseAffine;
    if (name == "zscore_global") return NormalizationMode::ZScoreGlobal;
    throw ValidationError("unknown normalization mode '" + std::string(name) + "'");
}

void AugmentationSpec::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(level_min) || !finite(level_max) || !finite(width_min) || !finite(width_max)) {
        throw ValidationError("augmentation ranges must be finite");
    }
    if (level_min > level_max) throw ValidationError("level_range: L_min must be <= L_max");
    if (width_min > width_max) throw ValidationError("width_range: W_min must be <= W_max");
    if (!(width_min > 0.0)) throw ValidationError("width_range: W_min must be > 0");
    if (base.width() < width_min || base.width() > width_max) {
        throw ValidationError("base width must lie inside width_range");
    }
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!probability(p_level)) throw ValidationError("p_level must be in [0, 1]");
    if (!probability(p_width)) throw ValidationError("p_width must be in [0, 1]");
    if (normalization == NormalizationMode::ZScoreGlobal && !(zscore.std > 0.0 && finite(zscore.mean))) {
        throw ValidationError("zscore_global needs a finite mean and std > 0");
    }
}

Normalization AugmentationSpec::resolved_normalization() const {
    switch (normalization) {
        case NormalizationMode::MinMaxSampledWindow: return MinMaxSampledWindow{};
        case NormalizationMode::FixedBaseAffine: return FixedBaseAffine{base};
        case NormalizationMode::ZScoreGlobal: return zscore;
    }
    return MinMaxSampledWindow{};
}

namespace {

template <class Map>
std::vector<float> clip_and_map(std::span<const float> in, double lower, double upper, Map map) {
    std::vector<float> out(in.size());
    std::transform(in.begin(), in.end(), out.begin(), [&](float x) {
        const double clipped = std::min(std::max(static_cast<double>(x), lower), upper);
        return static_cast<float>(map(clipped));
    });
    return out;
}

}  // namespace

Volume apply_window(const Volume& v, const ViewingWindow& window, const Normalization& normalization) {
    if (v.units() != Units::HU) {
        throw PreconditionError("apply_window expects a volume in HU, got " + std::string(to_string(v.units())));
    }
    const double lower = window.lower();
    const double upper = window.upper();

    return std::visit(
        [&](const auto& norm) {
            using T = std::decay_t<decltype(norm)>;
            if constexpr (std::is_same_v<T, MinMaxSampledWindow>) {
                const double span = upper - lower;
                auto voxels = clip_and_map(v.voxels(), lower, upper,
                                           [&](double c) { return (c - lower) / span; });
                return v.with_voxels(std::move(voxels), Units::Normalized01);
            } else if constexpr (std::is_same_v<T, FixedBaseAffine>) {
                const double base_lower = norm.base.lower();
                const double span = norm.base.upper() - base_lower;
                auto voxels = clip_and_map(v.voxels(), lower, upper,
                                           [&](double c) { return (c - base_lower) / span; });
                const bool inside = lower >= base_lower && upper <= norm.base.upper();
                return v.with_voxels(std::move(voxels), inside ? Units::Normalized01 : Units::Rescaled);
            } else {
                if (!(norm.std > 0.0)) throw PreconditionError("z-score std must be > 0");
                const double mean = norm.mean;
                const double sd = norm.std;
                auto voxels = clip_and_map(v.voxels(), lower, upper, [&](double c) { return (c - mean) / sd; });
                return v.with_voxels(std::move(voxels), Units::ZScore);
            }
        },
        normalization);
}

Volume random_windowing(const Volume& v, const AugmentationSpec& spec, RandomStream& rng,
                        SampledWindow* sampled) {
    spec.validate();
    const SampledWindow drawn = sample_window(spec, rng);
    if (sampled != nullptr) *sampled = drawn;
    return apply_window(v, drawn.window, spec.resolved_normalization());
}

Volume rw_shift_scale(const Volume& v, const AugmentationSpec& spec, RandomStream& rng,
                      SampledWindow* sampled) {
    if (spec.normalization == NormalizationMode::MinMaxSampledWindow) {
        throw ValidationError(
            "rw_shift_scale needs fixed_base_affine or zscore_global normalization; "
            "minmax_sampled_window is random windowing");
    }
    return random_windowing(v, spec, rng, sampled);
}

Volume base_windowing(const Volume& v, const AugmentationSpec& spec) {
    return apply_window(v, spec.base, spec.resolved_normalization());
}

Interval normalized_interval(const ViewingWindow& window, const Normalization& normalization) {
    return std::visit(
        [&](const auto& norm) -> Interval {
            using T = std::decay_t<decltype(norm)>;
            if constexpr (std::is_same_v<T, MinMaxSampledWindow>) {
                return {0.0, 1.0};
            } else if constexpr (std::is_same_v<T, FixedBaseAffine>) {
                const double span = norm.base.upper() - norm.base.lower();
                const float lo = static_cast<float>((window.lower() - norm.base.lower()) / span);
                const float hi = static_cast<float>((window.upper() - norm.base.lower()) / span);
                return {lo, hi};
            } else {
                const float lo = static_cast<float>((window.lower() - norm.mean) / norm.std);
                const float hi = static_cast<float>((window.upper() - norm.mean) / norm.std);
                return {lo, hi};
            }
        },
        normalization);
}

}  // namespace ctaug
