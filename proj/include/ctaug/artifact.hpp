#pragma once

/// @file artifact.hpp
/// @brief Clipping-artifact detection and histogram shape analysis.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ctaug/volume.hpp"
#include "ctaug/windowing.hpp"

namespace ctaug {

/// Fixed-width histogram. Bins are closed-open except the last, which is
/// closed. Voxels outside [lo, hi] go to underflow/overflow;
/// in_range() + underflow + overflow == total.
struct Histogram {
    std::vector<double> bin_edges;
    std::vector<std::uint64_t> counts;
    std::uint64_t underflow = 0;
    std::uint64_t overflow = 0;
    std::uint64_t total = 0;

    [[nodiscard]] std::size_t bins() const { return counts.size(); }
    [[nodiscard]] double bin_width() const;
    [[nodiscard]] std::uint64_t in_range() const;
};

/// Throws PreconditionError unless bins >= 1 and lo < hi.
Histogram histogram(const Volume& v, std::size_t bins, double lo, double hi);
Histogram histogram(std::span<const float> values, std::size_t bins, double lo, double hi);

/// Minimum over integer bin shifts (|k| <= bins - 1, zero padded) of the L1
/// distance between count-normalized histograms. 0 means `b` is a pure
/// translation of `a` at bin resolution; the maximum is 2.
/// Throws PreconditionError when the bin widths differ.
double shape_distance(const Histogram& a, const Histogram& b);

/// CSV rows "bin_lo,bin_hi,count" with a header line.
std::string to_csv(const Histogram& h);

struct ArtifactReport {
    bool lower_artifact = false;
    bool upper_artifact = false;
    /// min(after over argmin(before)) - min(before); positive means the
    /// saturated low end moved inward.
    double displaced_lower = 0.0;
    /// max(before) - max(after over argmax(before)); positive means the
    /// saturated high end moved inward.
    double displaced_upper = 0.0;
    /// Share of boundary voxels (argmin or argmax of before) that moved inward
    /// by more than the tolerance.
    double fraction_boundary_voxels_moved = 0.0;

    [[nodiscard]] bool any() const { return lower_artifact || upper_artifact; }
};

inline constexpr double kDefaultArtifactTolerance = 1e-6;

/// Checks t(x_min) > x_min or t(x_max) < x_max for a voxelwise transform
/// after = t(before), evaluated on the voxels that attain the extrema of
/// `before`. Throws PreconditionError on shape mismatch.
ArtifactReport detect_artifact(const Volume& before, const Volume& after,
                               double tolerance = kDefaultArtifactTolerance);

/// Check for a window method, whose only transform is the clip itself.
/// `before` is the reference clip apply_window(raw_hu, window, normalization)
/// and `after` is the method's output; in addition, whenever raw_hu reaches
/// past a window bound the output must sit exactly on the normalized image of
/// that bound, otherwise the corresponding artifact flag is raised.
ArtifactReport detect_window_artifact(const Volume& raw_hu, const Volume& after, const ViewingWindow& window,
                                      const Normalization& normalization,
                                      double tolerance = kDefaultArtifactTolerance);

}  // namespace ctaug
