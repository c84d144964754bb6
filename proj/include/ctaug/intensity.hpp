#pragma once

/// @file intensity.hpp
/// @brief Conventional intensity augmentations on clipped intensities and the
///        composed comparison pipelines built from them.
///
/// None of these re-clip by default. Applied after windowing they move the
/// saturated extremes of the clipped distribution, which is the artifact the
/// artifact module detects.

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "ctaug/rng.hpp"
#include "ctaug/volume.hpp"

namespace ctaug {

enum class TransformKind { Contrast, BrightnessMultiplicative, BrightnessAdditive, Gamma, GammaInverse };

std::string_view to_string(TransformKind kind);
TransformKind transform_kind_from_string(std::string_view name);

/// Contrast anchor: the per-volume mean, or a fixed value such as the center
/// of the window (0.5 on [0, 1] data).
struct ImageMeanAnchor {
    friend bool operator==(const ImageMeanAnchor&, const ImageMeanAnchor&) = default;
};
struct WindowCenterAnchor {
    double value = 0.5;
    friend bool operator==(const WindowCenterAnchor&, const WindowCenterAnchor&) = default;
};
using Anchor = std::variant<ImageMeanAnchor, WindowCenterAnchor>;

/// out = anchor + alpha (x - anchor); optionally clipped back to the
/// volume's original [min, max].
Volume contrast(const Volume& v, double alpha, const Anchor& anchor, bool preserve_range);

/// out = factor * x, optionally clipped to [0, 1].
Volume brightness_mult(const Volume& v, double factor, bool clip01 = false);

/// out = x + offset, optionally clipped to [0, 1].
Volume brightness_add(const Volume& v, double offset, bool clip01 = false);

/// Rescales to [0, 1] by the volume's min/max, applies x^g (or 1 - (1 - x)^g
/// when `inverse`), and maps back. Constant volumes come back unchanged.
/// Throws PreconditionError unless g > 0.
Volume gamma(const Volume& v, double g, bool inverse);

struct IntensityTransform {
    TransformKind kind = TransformKind::Contrast;
    double lo = 1.0;
    double hi = 1.0;
    double probability = 0.0;
    Anchor anchor = ImageMeanAnchor{};
    /// Contrast clamps to the input's own [min, max]; the brightness kinds
    /// clamp to [0, 1]; gamma keeps its range regardless.
    bool preserve_range = false;

    /// lo <= hi, probability in [0, 1], lo > 0 for the gamma kinds.
    void validate() const;

    /// Applies the transform with a concrete parameter value.
    [[nodiscard]] Volume apply(const Volume& v, double parameter) const;

    friend bool operator==(const IntensityTransform&, const IntensityTransform&) = default;
};

struct Pipeline {
    std::vector<IntensityTransform> transforms;
    std::uint64_t seed = 0;
    /// An empty pipeline is valid only when explicitly marked as identity.
    bool identity = false;

    void validate() const;

    friend bool operator==(const Pipeline&, const Pipeline&) = default;
};

/// Runs transforms in list order. Each one draws a gate (fires when the draw
/// is < probability) and, if it fires, one parameter draw from [lo, hi).
Volume run_pipeline(const Volume& v, const Pipeline& pipeline, RandomStream& rng);

/// Contrast, multiplicative brightness, gamma, inverse gamma.
Pipeline preset_nnunet();

/// Additive then multiplicative intensity shift/scale.
Pipeline preset_unetr();

/// Intensity shift/scale ranges whose strength on the z-scored axis matches a
/// set of HU window ranges: offsets are the level deviations from the base
/// level divided by the global std, factors are the widths divided by the
/// base width. Both fire with `probability`.
Pipeline equal_strength_shift_scale(double level_min, double level_max, double width_min, double width_max,
                                    double base_level, double base_width, double global_std,
                                    double probability);

}  // namespace ctaug
