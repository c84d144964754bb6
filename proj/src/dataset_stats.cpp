#include "ctaug/dataset_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctaug/error.hpp"

namespace ctaug {

std::size_t nearest_rank(std::size_t n, double q) {
    const double exact = q * static_cast<double>(n);
    // q n of e.g. 0.995 * 200 can round to 199.00000000000003.
    const double rank = std::ceil(exact - 1e-9 * std::max(1.0, exact));
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(rank, 1.0)), 1, n);
}

double quantile_nearest_rank(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw PreconditionError("quantile of an empty sample");
    if (q < 0.0 || q > 1.0) throw PreconditionError("quantile level must be in [0, 1]");
    return sorted[nearest_rank(sorted.size(), q) - 1];
}

void QuantileBuffer::add(double value, std::uint64_t count) {
    if (count == 0) return;
    counts_[value] += count;
    total_ += count;
}

void QuantileBuffer::add(std::span<const float> values) {
    for (float v : values) add(v);
}

void QuantileBuffer::merge(const QuantileBuffer& other) {
    for (const auto& [value, count] : other.counts_) counts_[value] += count;
    total_ += other.total_;
}

double QuantileBuffer::quantile(double q) const {
    if (total_ == 0) throw PreconditionError("quantile of an empty buffer");
    if (q < 0.0 || q > 1.0) throw PreconditionError("quantile level must be in [0, 1]");
    const std::uint64_t rank = nearest_rank(total_, q);
    std::uint64_t seen = 0;
    for (const auto& [value, count] : counts_) {
        seen += count;
        if (seen >= rank) return value;
    }
    return counts_.rbegin()->first;
}

double QuantileBuffer::min() const {
    if (total_ == 0) throw PreconditionError("min of an empty buffer");
    return counts_.begin()->first;
}

double QuantileBuffer::max() const {
    if (total_ == 0) throw PreconditionError("max of an empty buffer");
    return counts_.rbegin()->first;
}

void RunningMoments::add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

void RunningMoments::add(std::span<const float> xs) {
    for (float x : xs) add(x);
}

void RunningMoments::merge(const RunningMoments& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double delta = other.mean_ - mean_;
    const double n = na + nb;
    mean_ += delta * nb / n;
    m2_ += other.m2_ + delta * delta * na * nb / n;
    n_ += other.n_;
}

double RunningMoments::stddev() const {
    return n_ == 0 ? 0.0 : std::sqrt(m2_ / static_cast<double>(n_));
}

std::vector<float> labeled_values(const Volume& v, const Mask& m, std::uint8_t label) {
    require_aligned(v, m);
    std::vector<float> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (m[i] == label) out.push_back(v[i]);
    }
    return out;
}

namespace {

void require_coverage(double coverage) {
    if (!(coverage > 0.0 && coverage <= 1.0)) throw PreconditionError("coverage must be in (0, 1]");
}

}  // namespace

CoverageBounds coverage_bounds(const QuantileBuffer& buffer, double coverage) {
    require_coverage(coverage);
    const double tail = (1.0 - coverage) / 2.0;
    double lower = buffer.quantile(tail);
    double upper = buffer.quantile(1.0 - tail);
    const double level = lower + (upper - lower) / 2.0;
    if (upper - lower < kMinWindowWidth) {
        lower = level - kMinWindowWidth / 2.0;
        upper = level + kMinWindowWidth / 2.0;
        return {lower, upper, ViewingWindow(kMinWindowWidth, level)};
    }
    return {lower, upper, ViewingWindow(upper - lower, level)};
}

ViewingWindow coverage_window(const QuantileBuffer& buffer, double coverage) {
    return coverage_bounds(buffer, coverage).window;
}

CaseWindowEstimate case_window(const Volume& v, const Mask& m, std::uint8_t label, double coverage,
                               std::string case_id) {
    require_coverage(coverage);
    const auto values = labeled_values(v, m, label);
    if (values.empty()) {
        throw PreconditionError("case_window: no voxels carry label " + std::to_string(label));
    }
    QuantileBuffer buffer;
    buffer.add(values);
    const auto bounds = coverage_bounds(buffer, coverage);
    return {std::move(case_id), bounds.window, coverage, label, values.size(), bounds.lower, bounds.upper};
}

ViewingWindow pooled_window(std::span<const std::vector<float>> per_case_values, double coverage) {
    QuantileBuffer pooled;
    for (const auto& values : per_case_values) pooled.add(values);
    return pooled_window(pooled, coverage);
}

ViewingWindow pooled_window(const QuantileBuffer& pooled, double coverage) {
    if (pooled.empty()) throw PreconditionError("pooled_window: empty corpus");
    return coverage_window(pooled, coverage);
}

AugmentationRanges derive_aug_ranges(std::span<const CaseWindowEstimate> per_case, const ViewingWindow& base,
                                     double alpha) {
    if (per_case.size() < 2) throw PreconditionError("derive_aug_ranges needs at least two cases");
    if (!(alpha >= 0.0 && alpha < 0.5)) throw PreconditionError("alpha must be in [0, 0.5)");

    std::vector<double> levels;
    std::vector<double> widths;
    for (const auto& c : per_case) {
        levels.push_back(c.window.level());
        widths.push_back(c.window.width());
    }
    std::sort(levels.begin(), levels.end());
    std::sort(widths.begin(), widths.end());

    AugmentationRanges r{};
    r.level_min = std::min(quantile_nearest_rank(levels, alpha), base.level());
    r.level_max = std::max(quantile_nearest_rank(levels, 1.0 - alpha), base.level());
    r.width_min = std::min(quantile_nearest_rank(widths, alpha), base.width());
    r.width_max = std::max(quantile_nearest_rank(widths, 1.0 - alpha), base.width());
    return r;
}

DifficultyFlags classify_difficulty(const Volume& v, const Mask& m, const DifficultyThresholds& thresholds) {
    require_aligned(v, m);
    std::vector<double> liver;
    double tumor_sum = 0.0;
    std::size_t tumor_n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (m[i] == labels::kLiver) {
            liver.push_back(v[i]);
        } else if (m[i] == labels::kTumor) {
            tumor_sum += v[i];
            ++tumor_n;
        }
    }
    if (liver.empty()) throw PreconditionError("classify_difficulty: mask has no liver voxels");

    DifficultyFlags flags;
    std::sort(liver.begin(), liver.end());
    flags.median_liver_hu = quantile_nearest_rank(liver, 0.5);
    flags.poor_ce_timing = flags.median_liver_hu < thresholds.ce_low || flags.median_liver_hu > thresholds.ce_high;

    flags.has_tumor = tumor_n > 0;
    if (flags.has_tumor) {
        const double liver_mean = std::accumulate(liver.begin(), liver.end(), 0.0) / static_cast<double>(liver.size());
        const double tumor_mean = tumor_sum / static_cast<double>(tumor_n);
        flags.mean_tissue_difference = std::abs(tumor_mean - liver_mean);
        flags.low_hu_contrast = flags.mean_tissue_difference < thresholds.min_tissue_difference;
    }
    return flags;
}

std::vector<bool> flag_ce_timing_percentile(std::span<const CaseMedian> cases, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 0.5)) throw PreconditionError("percentile fraction must be in [0, 0.5]");
    const std::size_t n = cases.size();
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<bool> flagged(n, false);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cases[a].median_liver_hu != cases[b].median_liver_hu) {
            return cases[a].median_liver_hu < cases[b].median_liver_hu;
        }
        return cases[a].case_id < cases[b].case_id;
    });
    for (std::size_t i = 0; i < k; ++i) flagged[order[i]] = true;

    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cases[a].median_liver_hu != cases[b].median_liver_hu) {
            return cases[a].median_liver_hu > cases[b].median_liver_hu;
        }
        return cases[a].case_id < cases[b].case_id;
    });
    for (std::size_t i = 0; i < k; ++i) flagged[order[i]] = true;
    return flagged;
}

}  // namespace ctaug
