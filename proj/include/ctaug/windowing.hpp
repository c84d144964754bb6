#pragma once

/// @file windowing.hpp
/// @brief Viewing-window preprocessing and window augmentations.
///
/// Window shifting resamples the level, window scaling resamples the width,
/// and random windowing does both before the clip, so the augmentation acts
/// on raw HU instead of on already clipped intensities.

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

#include "ctaug/rng.hpp"
#include "ctaug/volume.hpp"

namespace ctaug {

/// Affine map of the applied window onto [0, 1].
struct MinMaxSampledWindow {
    friend bool operator==(const MinMaxSampledWindow&, const MinMaxSampledWindow&) = default;
};

/// Affine map of a fixed base window onto [0, 1]; a surviving HU value always
/// maps to the same output no matter which window clipped the volume.
struct FixedBaseAffine {
    ViewingWindow base;
    friend bool operator==(const FixedBaseAffine&, const FixedBaseAffine&) = default;
};

/// (x - mean) / std with dataset-wide statistics.
struct ZScoreGlobal {
    double mean = 0.0;
    double std = 1.0;
    friend bool operator==(const ZScoreGlobal&, const ZScoreGlobal&) = default;
};

using Normalization = std::variant<MinMaxSampledWindow, FixedBaseAffine, ZScoreGlobal>;

enum class NormalizationMode { MinMaxSampledWindow, FixedBaseAffine, ZScoreGlobal };

std::string_view to_string(NormalizationMode mode);
NormalizationMode normalization_mode_from_string(std::string_view name);

/// Sampling ranges and gate probabilities for random windowing.
struct AugmentationSpec {
    ViewingWindow base{169.0, 65.0};
    double level_min = 12.0;
    double level_max = 130.0;
    double width_min = 129.0;
    double width_max = 298.0;
    double p_level = 0.3;
    double p_width = 0.3;
    NormalizationMode normalization = NormalizationMode::MinMaxSampledWindow;
    /// Only read when normalization == ZScoreGlobal.
    ZScoreGlobal zscore{};
    std::uint64_t seed = 0;

    /// Throws ValidationError when an invariant is broken:
    /// level_min <= level_max, 0 < width_min <= base.width <= width_max,
    /// probabilities in [0, 1], positive z-score std.
    void validate() const;

    /// The normalization this spec applies, with the base window bound in.
    [[nodiscard]] Normalization resolved_normalization() const;

    friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

struct SampledWindow {
    ViewingWindow window;
    bool level_was_shifted = false;
    bool width_was_scaled = false;
    /// 2, 3 or 4: two gate draws plus one value draw per passed gate.
    int draws_consumed = 0;
};

/// Clip every voxel to [lower, upper] of `window`, then normalize.
///
/// MinMaxSampledWindow maps the clip interval onto [0, 1] using the window's
/// own bounds, (x - lower) / (upper - lower), which sends the bounds exactly
/// to 0 and 1. FixedBaseAffine uses the base bounds instead; when the applied
/// window is wider than the base, values outside [0, 1] survive and the
/// output is tagged Units::Rescaled. ZScoreGlobal subtracts the mean and
/// divides by the std.
///
/// Throws PreconditionError unless v is in HU.
Volume apply_window(const Volume& v, const ViewingWindow& window, const Normalization& normalization);

/// Draws a window in fixed order: width gate, width value (if the gate
/// passed), level gate, level value (if the gate passed). A gate passes when
/// its draw is < p; a failed gate keeps the base value.
template <UniformSource Source>
SampledWindow sample_window(const AugmentationSpec& spec, Source& source) {
    double width = spec.base.width();
    double level = spec.base.level();
    SampledWindow out{spec.base};

    ++out.draws_consumed;
    if (source.uniform() < spec.p_width) {
        width = uniform_between(source, spec.width_min, spec.width_max);
        out.width_was_scaled = true;
        ++out.draws_consumed;
    }
    ++out.draws_consumed;
    if (source.uniform() < spec.p_level) {
        level = uniform_between(source, spec.level_min, spec.level_max);
        out.level_was_shifted = true;
        ++out.draws_consumed;
    }
    out.window = ViewingWindow(width, level);
    return out;
}

/// Random windowing: sample a window from `spec`, then apply it with the
/// spec's normalization. With MinMaxSampledWindow the output is in [0, 1].
/// `sampled`, when given, receives the drawn window.
Volume random_windowing(const Volume& v, const AugmentationSpec& spec, RandomStream& rng,
                        SampledWindow* sampled = nullptr);

/// HU-preserving variant: clip to a sampled window but normalize with the
/// fixed base (or z-score) map. Augments only through which HU survive the
/// clip. Throws ValidationError if spec.normalization is MinMaxSampledWindow.
Volume rw_shift_scale(const Volume& v, const AugmentationSpec& spec, RandomStream& rng,
                      SampledWindow* sampled = nullptr);

/// Static preprocessing with the spec's base window (what inference uses).
Volume base_windowing(const Volume& v, const AugmentationSpec& spec);

/// Output interval [lo, hi] that a window maps onto under a normalization,
/// rounded to float exactly like the voxels at the window bounds.
struct Interval {
    float lo;
    float hi;
};
Interval normalized_interval(const ViewingWindow& window, const Normalization& normalization);

/// Reference windows used throughout the evaluation tables.
namespace windows {
inline ViewingWindow raw() { return {2000.0, 0.0}; }
inline ViewingWindow abdomen() { return {500.0, 150.0}; }
inline ViewingWindow liver() { return {196.0, 91.0}; }
inline ViewingWindow tumor() { return {169.0, 65.0}; }
}  // namespace windows

}  // namespace ctaug
