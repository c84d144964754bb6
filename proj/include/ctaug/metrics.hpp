#pragma once

/// @file metrics.hpp
/// @brief Segmentation evaluation: Dice, connected components, lesion-level
///        detection metrics and the Wilcoxon signed-rank test.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ctaug/volume.hpp"

namespace ctaug {

/// Foreground flags (0/1) on a grid.
struct BinaryMask {
    Shape shape;
    std::vector<std::uint8_t> voxels;

    /// Voxels equal to `label`.
    static BinaryMask from_label(const Mask& m, std::uint8_t label);
    /// Voxels with any non-background label.
    static BinaryMask from_nonzero(const Mask& m);

    [[nodiscard]] std::size_t count() const;
};

/// 2 |P n G| / (|P| + |G|). Two empty masks score 1.
/// Throws PreconditionError on shape mismatch.
double dice(const BinaryMask& pred, const BinaryMask& gt);

enum class Connectivity {
    Face6,    ///< 4-connectivity on a single slice
    Edge18,
    Vertex26, ///< 8-connectivity on a single slice
};

struct ComponentLabels {
    Shape shape;
    /// 0 = background, components numbered 1..count by first voxel in scan order.
    std::vector<std::int32_t> labels;
    std::int32_t count = 0;
};

ComponentLabels connected_components(const BinaryMask& m, Connectivity connectivity = Connectivity::Vertex26);

/// Which voxels form the overlap denominator when matching lesions.
enum class OverlapRule {
    /// A GT lesion is detected when more than `threshold` of its voxels are
    /// predicted; a predicted component is correct when more than `threshold`
    /// of its voxels fall on GT.
    PerSide,
    /// Both decisions are relative to the GT lesion size: a predicted
    /// component is correct when it covers more than `threshold` of some
    /// GT lesion.
    GtLesionSize,
    /// Both decisions are relative to the predicted component size: a GT
    /// lesion is detected when some predicted component puts more than
    /// `threshold` of its own voxels on it.
    PredComponentSize,
};

enum class F1Mode {
    /// 2 TP / (2 TP + FP + FN) with TP counted on the GT side.
    DetectionCounts,
    /// Harmonic mean of recall and precision.
    Symmetric,
};

struct LesionMatchOptions {
    double overlap_threshold = 0.10;
    Connectivity connectivity = Connectivity::Vertex26;
    OverlapRule rule = OverlapRule::PerSide;
    F1Mode f1_mode = F1Mode::DetectionCounts;
};

struct InstanceMatchResult {
    std::size_t true_positives = 0;   ///< detected GT lesions
    std::size_t false_positives = 0;  ///< predicted components not on GT
    std::size_t false_negatives = 0;  ///< undetected GT lesions
    std::size_t matched_predictions = 0;
    std::size_t predicted_components = 0;
    /// Covered share of each GT lesion, in component order.
    std::vector<double> gt_overlap_fractions;
    /// Share of each predicted component lying on GT, in component order.
    std::vector<double> pred_overlap_fractions;
    double f1 = 1.0;
    double recall = 1.0;
    double precision = 1.0;
};

/// Lesion-level matching after connected-component analysis. Overlap must be
/// strictly greater than the threshold. With no GT lesions recall is 1; with
/// no predicted components precision is 1; F1 of two empty masks is 1.
InstanceMatchResult lesion_instance_metrics(const BinaryMask& pred, const BinaryMask& gt,
                                            const LesionMatchOptions& options = {});

enum class SignificanceMethod { ExactEnumeration, NormalApproximation };
std::string_view to_string(SignificanceMethod method);

struct SignificanceResult {
    /// min(W+, W-), the two-sided signed-rank statistic.
    double statistic = 0.0;
    double w_plus = 0.0;
    double p_value = 1.0;
    std::size_t n_effective = 0;
    SignificanceMethod method = SignificanceMethod::ExactEnumeration;
};

/// Largest number of non-zero differences handled by the exact null
/// distribution; above it the normal approximation is used.
inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped and ties share average ranks. Up to kWilcoxonExactLimit
/// differences the p-value is exact over all 2^n sign assignments (counted by
/// dynamic programming over half-rank sums); beyond it a normal approximation
/// with tie and continuity correction is used.
/// Throws PreconditionError if lengths differ or are zero.
SignificanceResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace ctaug
