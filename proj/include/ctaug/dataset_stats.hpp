#pragma once

/// @file dataset_stats.hpp
/// @brief Corpus statistics: per-case and pooled foreground windows,
///        augmentation ranges, and difficult-case classification.
///
/// Quantiles are nearest-rank on sorted values: q maps to the value at
/// 1-based rank max(1, ceil(q n)).

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctaug/volume.hpp"

namespace ctaug {

/// Nearest-rank quantile of an ascending-sorted sample. Throws
/// PreconditionError on empty input or q outside [0, 1].
double quantile_nearest_rank(std::span<const double> sorted, double q);

/// 1-based nearest rank for quantile q of n values, robust to q n landing a
/// rounding error above an integer.
std::size_t nearest_rank(std::size_t n, double q);

/// Exact, mergeable value multiset for quantiles over pooled voxels. Memory
/// grows with the number of distinct values, which is bounded for integer HU.
class QuantileBuffer {
public:
    void add(double value, std::uint64_t count = 1);
    void add(std::span<const float> values);
    void merge(const QuantileBuffer& other);

    [[nodiscard]] std::uint64_t size() const { return total_; }
    [[nodiscard]] bool empty() const { return total_ == 0; }
    [[nodiscard]] double quantile(double q) const;
    [[nodiscard]] double min() const;
    [[nodiscard]] double max() const;

private:
    std::map<double, std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Mergeable mean/variance accumulator (Chan et al. pairwise update).
class RunningMoments {
public:
    void add(double x);
    void add(std::span<const float> xs);
    void merge(const RunningMoments& other);

    [[nodiscard]] std::uint64_t count() const { return n_; }
    [[nodiscard]] double mean() const { return mean_; }
    /// Population standard deviation.
    [[nodiscard]] double stddev() const;

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct CaseWindowEstimate {
    std::string case_id;
    ViewingWindow window{1.0, 0.0};
    double coverage = 0.99;
    std::uint8_t label = labels::kTumor;
    std::uint64_t voxel_count = 0;
    /// Exact quantile bounds; window.lower()/upper() recompute them from
    /// (width, level) and may differ by rounding.
    double lower_hu = 0.0;
    double upper_hu = 0.0;

    [[nodiscard]] bool contains(double hu) const { return hu >= lower_hu && hu <= upper_hu; }
};

/// HU values of the voxels carrying `label`.
std::vector<float> labeled_values(const Volume& v, const Mask& m, std::uint8_t label);

/// Smallest window width reported; degenerate (single-valued) windows are
/// widened to this so downstream specs stay valid.
inline constexpr double kMinWindowWidth = 1.0;

struct CoverageBounds {
    double lower;
    double upper;
    ViewingWindow window;
};

/// Window spanning the central `coverage` share of the quantiles in `buffer`.
CoverageBounds coverage_bounds(const QuantileBuffer& buffer, double coverage);
ViewingWindow coverage_window(const QuantileBuffer& buffer, double coverage);

/// Window [q_{(1-c)/2}, q_{1-(1-c)/2}] of the HU under `label`.
/// Throws PreconditionError for an empty label set or coverage outside (0, 1].
CaseWindowEstimate case_window(const Volume& v, const Mask& m, std::uint8_t label, double coverage,
                               std::string case_id = {});

/// Quantile window over the pooled labeled voxels of all cases (not an
/// average of per-case windows). Throws PreconditionError on empty input.
ViewingWindow pooled_window(std::span<const std::vector<float>> per_case_values, double coverage);
ViewingWindow pooled_window(const QuantileBuffer& pooled, double coverage);

struct AugmentationRanges {
    double level_min;
    double level_max;
    double width_min;
    double width_max;
};

/// Quantile-span rule: [q_alpha, q_{1-alpha}] of per-case levels and widths,
/// widened if needed to contain the base window. Throws PreconditionError
/// with fewer than two cases or alpha outside [0, 0.5).
AugmentationRanges derive_aug_ranges(std::span<const CaseWindowEstimate> per_case, const ViewingWindow& base,
                                     double alpha = 0.01);

struct DifficultyThresholds {
    double min_tissue_difference = 20.0;
    double ce_low = 89.0;
    double ce_high = 137.0;
};

struct DifficultyFlags {
    bool low_hu_contrast = false;
    double mean_tissue_difference = 0.0;
    bool poor_ce_timing = false;
    double median_liver_hu = 0.0;
    /// False when the mask holds no tumor; low_hu_contrast is then false.
    bool has_tumor = false;
};

/// Fixed-threshold classification of one case. Liver statistics use liver
/// voxels excluding tumor. Throws PreconditionError without liver voxels.
DifficultyFlags classify_difficulty(const Volume& v, const Mask& m, const DifficultyThresholds& thresholds = {});

struct CaseMedian {
    std::string case_id;
    double median_liver_hu;
};

/// Percentile mode for CE timing: flags the floor(fraction N) cases with the
/// lowest and the floor(fraction N) with the highest median liver HU; ties
/// are broken by case_id. Result is parallel to `cases`.
std::vector<bool> flag_ce_timing_percentile(std::span<const CaseMedian> cases, double fraction = 0.10);

}  // namespace ctaug
