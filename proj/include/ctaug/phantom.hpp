#pragma once

/// @file phantom.hpp
/// @brief Synthetic abdominal CT phantoms with controlled tissue HU.
///
/// Geometry lives in normalized coordinates: voxel (z, y, x) has center
/// p = ((z + 0.5) / nz, (y + 0.5) / ny, (x + 0.5) / nx), so the same spec
/// describes the same anatomy at any resolution. A voxel belongs to a region
/// when its center passes the inclusion test; there is no partial volume.

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ctaug/volume.hpp"

namespace ctaug {

/// Axis-aligned ellipsoid in normalized (z, y, x) coordinates.
struct Ellipsoid {
    std::array<double, 3> center{0.5, 0.5, 0.5};
    std::array<double, 3> radii{0.5, 0.5, 0.5};

    /// Squared normalized radius of point p; <= 1 means inside.
    [[nodiscard]] double rho2(const std::array<double, 3>& p) const;

    friend bool operator==(const Ellipsoid&, const Ellipsoid&) = default;
};

/// Physically spherical tumor: normalized center, radius in millimeters.
struct TumorSphere {
    std::array<double, 3> center{0.5, 0.5, 0.5};
    double radius_mm = 5.0;

    friend bool operator==(const TumorSphere&, const TumorSphere&) = default;
};

struct PhantomSpec {
    Shape shape{24, 64, 64};
    Spacing spacing{1.5, 1.5, 1.5};

    double body_hu = 40.0;
    double liver_hu = 110.0;
    /// One tumor per entry; tumor k sits at liver_hu + tumor_offsets[k].
    std::vector<double> tumor_offsets{-30.0};
    double bone_hu = 700.0;
    double air_hu = -1000.0;
    /// Added to liver and tumors (contrast-enhancement timing).
    double ce_offset = 0.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    Ellipsoid body{{0.5, 0.5, 0.5}, {0.5, 0.46, 0.48}};
    /// The bone ring is the shell of the body ellipsoid with normalized
    /// radius in [bone_inner, bone_outer].
    double bone_inner = 0.82;
    double bone_outer = 0.92;
    Ellipsoid liver{{0.5, 0.45, 0.4}, {0.3, 0.25, 0.25}};
    /// Explicit tumor placement, parallel to tumor_offsets. When empty the
    /// tumors are spaced along the liver's x axis with a common radius.
    std::vector<TumorSphere> tumors;

    /// Throws ValidationError for broken invariants: non-finite values,
    /// negative noise, geometry outside [0, 1], bone ring reaching the liver,
    /// tumors not strictly inside the liver, a tumor too small to own a voxel.
    void validate() const;

    /// Tumor placement in effect (explicit or automatic).
    [[nodiscard]] std::vector<TumorSphere> resolved_tumors() const;

    friend bool operator==(const PhantomSpec&, const PhantomSpec&) = default;
};

/// Labels 1 (liver) and 2 (tumor) exactly match the geometry; noise never
/// touches the mask. Noise is zero-mean Gaussian with noise_sigma, drawn per
/// z slice from stream RandomStream(seed).split(z) with Box-Muller pairs in
/// scan order, so slices can be generated in any order or in parallel.
std::pair<Volume, Mask> generate_phantom(const PhantomSpec& spec);

/// Noise-free HU of each tissue: air, body, bone, liver, tumor k.
struct PhantomTissues {
    double air;
    double body;
    double bone;
    double liver;
    std::vector<double> tumors;
};
PhantomTissues tissue_hu(const PhantomSpec& spec);

}  // namespace ctaug
