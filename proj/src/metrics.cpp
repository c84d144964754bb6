#include "ctaug/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

#include "ctaug/error.hpp"

namespace ctaug {

BinaryMask BinaryMask::from_label(const Mask& m, std::uint8_t label) {
    BinaryMask out{m.shape(), std::vector<std::uint8_t>(m.size())};
    for (std::size_t i = 0; i < m.size(); ++i) out.voxels[i] = m[i] == label ? 1 : 0;
    return out;
}

BinaryMask BinaryMask::from_nonzero(const Mask& m) {
    BinaryMask out{m.shape(), std::vector<std::uint8_t>(m.size())};
    for (std::size_t i = 0; i < m.size(); ++i) out.voxels[i] = m[i] != 0 ? 1 : 0;
    return out;
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count_if(voxels.begin(), voxels.end(), [](std::uint8_t v) { return v != 0; }));
}

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (!(a.shape == b.shape) || a.voxels.size() != b.voxels.size()) {
        throw PreconditionError("mask shapes differ");
    }
}

}  // namespace

double dice(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_shape(pred, gt);
    std::size_t p = 0;
    std::size_t g = 0;
    std::size_t both = 0;
    for (std::size_t i = 0; i < pred.voxels.size(); ++i) {
        const bool in_p = pred.voxels[i] != 0;
        const bool in_g = gt.voxels[i] != 0;
        p += in_p;
        g += in_g;
        both += in_p && in_g;
    }
    if (p + g == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

ComponentLabels connected_components(const BinaryMask& m, Connectivity connectivity) {
    if (m.voxels.size() != m.shape.count()) throw PreconditionError("mask size does not match shape");
    const Shape& s = m.shape;

    std::vector<std::array<int, 3>> offsets;
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int order = std::abs(dz) + std::abs(dy) + std::abs(dx);
                if (order == 0) continue;
                if (connectivity == Connectivity::Face6 && order > 1) continue;
                if (connectivity == Connectivity::Edge18 && order > 2) continue;
                offsets.push_back({dz, dy, dx});
            }
        }
    }

    ComponentLabels out{s, std::vector<std::int32_t>(m.voxels.size(), 0), 0};
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < m.voxels.size(); ++seed) {
        if (m.voxels[seed] == 0 || out.labels[seed] != 0) continue;
        const std::int32_t label = ++out.count;
        out.labels[seed] = label;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const auto z = static_cast<long>(i / (s.y * s.x));
            const auto y = static_cast<long>((i / s.x) % s.y);
            const auto x = static_cast<long>(i % s.x);
            for (const auto& [dz, dy, dx] : offsets) {
                const long nz = z + dz;
                const long ny = y + dy;
                const long nx = x + dx;
                if (nz < 0 || ny < 0 || nx < 0 || nz >= static_cast<long>(s.z) || ny >= static_cast<long>(s.y) ||
                    nx >= static_cast<long>(s.x)) {
                    continue;
                }
                const std::size_t j = s.index(static_cast<std::size_t>(nz), static_cast<std::size_t>(ny),
                                              static_cast<std::size_t>(nx));
                if (m.voxels[j] != 0 && out.labels[j] == 0) {
                    out.labels[j] = label;
                    stack.push_back(j);
                }
            }
        }
    }
    return out;
}

InstanceMatchResult lesion_instance_metrics(const BinaryMask& pred, const BinaryMask& gt,
                                            const LesionMatchOptions& options) {
    require_same_shape(pred, gt);
    const auto gt_cc = connected_components(gt, options.connectivity);
    const auto pred_cc = connected_components(pred, options.connectivity);

    std::vector<std::size_t> gt_size(static_cast<std::size_t>(gt_cc.count) + 1, 0);
    std::vector<std::size_t> pred_size(static_cast<std::size_t>(pred_cc.count) + 1, 0);
    std::vector<std::size_t> gt_covered(gt_size.size(), 0);
    std::vector<std::size_t> pred_on_gt(pred_size.size(), 0);
    std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> pair_overlap;

    for (std::size_t i = 0; i < gt.voxels.size(); ++i) {
        const auto g = gt_cc.labels[i];
        const auto p = pred_cc.labels[i];
        if (g != 0) ++gt_size[static_cast<std::size_t>(g)];
        if (p != 0) ++pred_size[static_cast<std::size_t>(p)];
        if (g != 0 && p != 0) {
            ++gt_covered[static_cast<std::size_t>(g)];
            ++pred_on_gt[static_cast<std::size_t>(p)];
            ++pair_overlap[{g, p}];
        }
    }

    const double threshold = options.overlap_threshold;
    auto fraction = [](std::size_t part, std::size_t whole) {
        return static_cast<double>(part) / static_cast<double>(whole);
    };

    InstanceMatchResult r;
    std::vector<bool> gt_detected(gt_size.size(), false);
    std::vector<bool> pred_correct(pred_size.size(), false);

    for (std::size_t g = 1; g < gt_size.size(); ++g) {
        r.gt_overlap_fractions.push_back(fraction(gt_covered[g], gt_size[g]));
    }
    for (std::size_t p = 1; p < pred_size.size(); ++p) {
        r.pred_overlap_fractions.push_back(fraction(pred_on_gt[p], pred_size[p]));
    }

    switch (options.rule) {
        case OverlapRule::PerSide:
            for (std::size_t g = 1; g < gt_size.size(); ++g) gt_detected[g] = r.gt_overlap_fractions[g - 1] > threshold;
            for (std::size_t p = 1; p < pred_size.size(); ++p) {
                pred_correct[p] = r.pred_overlap_fractions[p - 1] > threshold;
            }
            break;
        case OverlapRule::GtLesionSize:
            for (std::size_t g = 1; g < gt_size.size(); ++g) gt_detected[g] = r.gt_overlap_fractions[g - 1] > threshold;
            for (const auto& [key, n] : pair_overlap) {
                const auto g = static_cast<std::size_t>(key.first);
                if (fraction(n, gt_size[g]) > threshold) pred_correct[static_cast<std::size_t>(key.second)] = true;
            }
            break;
        case OverlapRule::PredComponentSize:
            for (std::size_t p = 1; p < pred_size.size(); ++p) {
                pred_correct[p] = r.pred_overlap_fractions[p - 1] > threshold;
            }
            for (const auto& [key, n] : pair_overlap) {
                const auto p = static_cast<std::size_t>(key.second);
                if (fraction(n, pred_size[p]) > threshold) gt_detected[static_cast<std::size_t>(key.first)] = true;
            }
            break;
    }

    r.predicted_components = static_cast<std::size_t>(pred_cc.count);
    for (std::size_t g = 1; g < gt_size.size(); ++g) (gt_detected[g] ? r.true_positives : r.false_negatives)++;
    for (std::size_t p = 1; p < pred_size.size(); ++p) (pred_correct[p] ? r.matched_predictions : r.false_positives)++;

    const std::size_t gt_total = r.true_positives + r.false_negatives;
    r.recall = gt_total == 0 ? 1.0 : fraction(r.true_positives, gt_total);
    r.precision = r.predicted_components == 0 ? 1.0 : fraction(r.matched_predictions, r.predicted_components);
    if (options.f1_mode == F1Mode::DetectionCounts) {
        const std::size_t denom = 2 * r.true_positives + r.false_positives + r.false_negatives;
        r.f1 = denom == 0 ? 1.0 : fraction(2 * r.true_positives, denom);
    } else {
        const double sum = r.recall + r.precision;
        r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.recall * r.precision / sum;
    }
    return r;
}

std::string_view to_string(SignificanceMethod method) {
    return method == SignificanceMethod::ExactEnumeration ? "exact" : "normal";
}

SignificanceResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw PreconditionError("wilcoxon_signed_rank: samples differ in length");
    if (a.empty()) throw PreconditionError("wilcoxon_signed_rank: empty samples");

    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    SignificanceResult result;
    const std::size_t n = diffs.size();
    result.n_effective = n;
    if (n == 0) return result;

    // Ranks of |d| with ties averaged, kept doubled so they stay integral.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return std::abs(diffs[i]) < std::abs(diffs[j]); });
    std::vector<long> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
        // Ranks i+1..j+1 averaged, doubled: (i + 1) + (j + 1).
        const auto shared = static_cast<long>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = shared;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    long w_plus2 = 0;
    long total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (diffs[i] > 0) w_plus2 += rank2[i];
    }
    result.w_plus = static_cast<double>(w_plus2) / 2.0;
    result.statistic = std::min(result.w_plus, static_cast<double>(total2 - w_plus2) / 2.0);

    if (n <= kWilcoxonExactLimit) {
        result.method = SignificanceMethod::ExactEnumeration;
        // ways[s] = number of sign assignments with doubled positive-rank sum s.
        std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
        ways[0] = 1.0;
        long reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (long s = reach; s >= 0; --s) {
                const double w = ways[static_cast<std::size_t>(s)];
                if (w != 0.0) ways[static_cast<std::size_t>(s + rank2[i])] += w;
            }
            reach += rank2[i];
        }
        double below = 0.0;
        double above = 0.0;
        for (long s = 0; s <= total2; ++s) {
            const double w = ways[static_cast<std::size_t>(s)];
            if (s <= w_plus2) below += w;
            if (s >= w_plus2) above += w;
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        result.p_value = std::min(1.0, 2.0 * std::min(below, above) / all);
    } else {
        result.method = SignificanceMethod::NormalApproximation;
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double deviation = std::max(0.0, std::abs(result.w_plus - mean) - 0.5);
        const double z = var > 0.0 ? deviation / std::sqrt(var) : 0.0;
        result.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    }
    return result;
}

}  // namespace ctaug
