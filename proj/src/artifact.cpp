#include "ctaug/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ctaug/error.hpp"

namespace ctaug {

double Histogram::bin_width() const {
    return bins() == 0 ? 0.0 : (bin_edges.back() - bin_edges.front()) / static_cast<double>(bins());
}

std::uint64_t Histogram::in_range() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Histogram histogram(std::span<const float> values, std::size_t bins, double lo, double hi) {
    if (bins < 1) throw PreconditionError("histogram needs at least one bin");
    if (!(lo < hi)) throw PreconditionError("histogram range needs lo < hi");

    Histogram h;
    h.bin_edges.resize(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.bin_edges[i] = lo + width * static_cast<double>(i);
    h.bin_edges.back() = hi;
    h.counts.assign(bins, 0);

    const double scale = static_cast<double>(bins) / (hi - lo);
    for (float f : values) {
        const double x = f;
        if (x < lo) {
            ++h.underflow;
        } else if (x > hi) {
            ++h.overflow;
        } else {
            const auto bin = std::min(static_cast<std::size_t>((x - lo) * scale), bins - 1);
            ++h.counts[bin];
        }
    }
    h.total = values.size();
    return h;
}

Histogram histogram(const Volume& v, std::size_t bins, double lo, double hi) {
    return histogram(v.voxels(), bins, lo, hi);
}

double shape_distance(const Histogram& a, const Histogram& b) {
    const double wa = a.bin_width();
    const double wb = b.bin_width();
    if (std::abs(wa - wb) > 1e-9 * std::max(std::abs(wa), std::abs(wb))) {
        throw PreconditionError("shape_distance needs equal bin widths");
    }
    auto normalized = [](const Histogram& h) {
        const double n = static_cast<double>(h.in_range());
        std::vector<double> p(h.counts.size(), 0.0);
        if (n > 0) {
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(h.counts[i]) / n;
        }
        return p;
    };
    const auto pa = normalized(a);
    const auto pb = normalized(b);
    const auto na = static_cast<std::ptrdiff_t>(pa.size());
    const auto nb = static_cast<std::ptrdiff_t>(pb.size());
    const std::ptrdiff_t max_shift = std::max(na, nb) - 1;

    double best = std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t k = -max_shift; k <= max_shift; ++k) {
        // b shifted by k: bin j of b lands on index j + k.
        const std::ptrdiff_t first = std::min<std::ptrdiff_t>(0, k);
        const std::ptrdiff_t last = std::max(na, nb + k);
        double d = 0.0;
        for (std::ptrdiff_t i = first; i < last; ++i) {
            const double va = (i >= 0 && i < na) ? pa[static_cast<std::size_t>(i)] : 0.0;
            const std::ptrdiff_t j = i - k;
            const double vb = (j >= 0 && j < nb) ? pb[static_cast<std::size_t>(j)] : 0.0;
            d += std::abs(va - vb);
        }
        best = std::min(best, d);
    }
    return best;
}

std::string to_csv(const Histogram& h) {
    std::ostringstream out;
    out.precision(17);
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out << h.bin_edges[i] << ',' << h.bin_edges[i + 1] << ',' << h.counts[i] << '\n';
    }
    return out.str();
}

ArtifactReport detect_artifact(const Volume& before, const Volume& after, double tolerance) {
    if (!(before.shape() == after.shape())) throw PreconditionError("detect_artifact: shape mismatch");
    ArtifactReport report;
    if (before.size() == 0) return report;

    const auto xs = before.voxels();
    const auto ys = after.voxels();
    const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    const double x_min = *lo_it;
    const double x_max = *hi_it;

    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -std::numeric_limits<double>::infinity();
    std::size_t boundary = 0;
    std::size_t moved = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const bool at_min = xs[i] == x_min;
        const bool at_max = xs[i] == x_max;
        if (!at_min && !at_max) continue;
        ++boundary;
        const double y = ys[i];
        bool inward = false;
        if (at_min) {
            t_min = std::min(t_min, y);
            inward = inward || y > x_min + tolerance;
        }
        if (at_max) {
            t_max = std::max(t_max, y);
            inward = inward || y < x_max - tolerance;
        }
        if (inward) ++moved;
    }

    report.displaced_lower = t_min - x_min;
    report.displaced_upper = x_max - t_max;
    report.lower_artifact = t_min > x_min + tolerance;
    report.upper_artifact = t_max < x_max - tolerance;
    report.fraction_boundary_voxels_moved = static_cast<double>(moved) / static_cast<double>(boundary);
    return report;
}

ArtifactReport detect_window_artifact(const Volume& raw_hu, const Volume& after, const ViewingWindow& window,
                                      const Normalization& normalization, double tolerance) {
    const Volume before = apply_window(raw_hu, window, normalization);
    ArtifactReport report = detect_artifact(before, after, tolerance);
    if (raw_hu.size() == 0) return report;

    const auto raw = raw_hu.voxels();
    const auto ys = after.voxels();
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const auto [out_lo, out_hi] = std::minmax_element(ys.begin(), ys.end());
    const Interval bounds = normalized_interval(window, normalization);
    if (*lo_it <= window.lower() && static_cast<double>(*out_lo) != bounds.lo) report.lower_artifact = true;
    if (*hi_it >= window.upper() && static_cast<double>(*out_hi) != bounds.hi) report.upper_artifact = true;
    return report;
}

}  // namespace ctaug
