#include "ctaug/volume.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "ctaug/error.hpp"

namespace ctaug {

std::string_view to_string(Units units) {
    switch (units) {
        case Units::HU: return "hu";
        case Units::Normalized01: return "norm01";
        case Units::ZScore: return "zscore";
        case Units::Rescaled: return "rescaled";
    }
    return "hu";
}

Units units_from_string(std::string_view name) {
    if (name == "hu") return Units::HU;
    if (name == "norm01") return Units::Normalized01;
    if (name == "zscore") return Units::ZScore;
    if (name == "rescaled") return Units::Rescaled;
    throw ValidationError("unknown units '" + std::string(name) + "'");
}

namespace {

void validate_geometry(const Shape& shape, const Spacing& spacing, std::size_t n) {
    if (shape.z == 0 || shape.y == 0 || shape.x == 0) {
        throw ValidationError("shape components must be positive");
    }
    if (!(spacing.z > 0.0) || !(spacing.y > 0.0) || !(spacing.x > 0.0) ||
        !std::isfinite(spacing.z) || !std::isfinite(spacing.y) || !std::isfinite(spacing.x)) {
        throw ValidationError("spacing components must be finite and strictly positive");
    }
    if (n != shape.count()) {
        throw ValidationError("voxel count " + std::to_string(n) + " does not match shape product " +
                              std::to_string(shape.count()));
    }
}

}  // namespace

Volume::Volume(Shape shape, Spacing spacing, std::vector<float> voxels, Units units)
    : shape_(shape), spacing_(spacing), voxels_(std::move(voxels)), units_(units) {
    validate_geometry(shape_, spacing_, voxels_.size());
    if (units_ == Units::Normalized01) {
        const bool inside = std::all_of(voxels_.begin(), voxels_.end(),
                                        [](float v) { return v >= 0.0f && v <= 1.0f; });
        if (!inside) throw ValidationError("norm01 volume has voxels outside [0, 1]");
    }
}

Volume Volume::from_int16(Shape shape, Spacing spacing, std::span<const std::int16_t> voxels,
                          Units units) {
    std::vector<float> widened(voxels.begin(), voxels.end());
    return Volume(shape, spacing, std::move(widened), units);
}

Volume Volume::with_voxels(std::vector<float> voxels, Units units) const {
    return Volume(shape_, spacing_, std::move(voxels), units);
}

LabelSet default_label_set() {
    return {{labels::kBackground, "background"}, {labels::kLiver, "liver"}, {labels::kTumor, "tumor"}};
}

Mask::Mask(Shape shape, Spacing spacing, std::vector<std::uint8_t> labels, LabelSet label_set)
    : shape_(shape), spacing_(spacing), labels_(std::move(labels)), label_set_(std::move(label_set)) {
    validate_geometry(shape_, spacing_, labels_.size());
    std::array<bool, 256> declared{};
    for (const auto& [value, name] : label_set_) declared[value] = true;
    for (std::uint8_t l : labels_) {
        if (!declared[l]) {
            throw ValidationError("mask contains undeclared label " + std::to_string(l));
        }
    }
}

std::size_t Mask::count(std::uint8_t label) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

void require_aligned(const Volume& v, const Mask& m) {
    if (!(v.shape() == m.shape())) throw PreconditionError("mask shape does not match volume shape");
}

ViewingWindow::ViewingWindow(double width, double level) : width_(width), level_(level) {
    if (!std::isfinite(width) || !std::isfinite(level)) {
        throw ValidationError("viewing window must be finite");
    }
    if (!(width > 0.0)) throw ValidationError("viewing window width must be > 0");
}

ViewingWindow ViewingWindow::from_bounds(double lower, double upper) {
    return ViewingWindow(upper - lower, lower + (upper - lower) / 2.0);
}

double hu_from_attenuation(double mu, double mu_water, double mu_air, HuConvention convention) {
    if (mu_air == mu_water) {
        throw PreconditionError("degenerate calibration: mu_air equals mu_water");
    }
    const double verbatim = 1000.0 * (mu - mu_water) / (mu_air - mu_water);
    return convention == HuConvention::Verbatim ? verbatim : -verbatim;
}

Shape resampled_shape(const Shape& shape, const Spacing& spacing, const Spacing& target) {
    auto axis = [](std::size_t n, double from, double to) {
        const double extent = static_cast<double>(n) * from / to;
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(extent)));
    };
    return {axis(shape.z, spacing.z, target.z), axis(shape.y, spacing.y, target.y),
            axis(shape.x, spacing.x, target.x)};
}

namespace {

struct AxisSample {
    std::size_t lo;
    std::size_t hi;
    double frac;
};

// Continuous source coordinate for each output index, clamped to the input grid.
std::vector<AxisSample> axis_samples(std::size_t n_in, std::size_t n_out, double from, double to) {
    std::vector<AxisSample> out(n_out);
    const double scale = to / from;
    const double last = static_cast<double>(n_in - 1);
    for (std::size_t i = 0; i < n_out; ++i) {
        double u = (static_cast<double>(i) + 0.5) * scale - 0.5;
        u = std::clamp(u, 0.0, last);
        const auto lo = static_cast<std::size_t>(std::floor(u));
        const std::size_t hi = std::min(lo + 1, n_in - 1);
        out[i] = {lo, hi, u - static_cast<double>(lo)};
    }
    return out;
}

void require_positive(const Spacing& s) {
    if (!(s.z > 0.0) || !(s.y > 0.0) || !(s.x > 0.0)) {
        throw PreconditionError("target spacing must be strictly positive");
    }
}

}  // namespace

Volume resample_trilinear(const Volume& v, const Spacing& target) {
    require_positive(target);
    const Shape& in = v.shape();
    const Shape out = resampled_shape(in, v.spacing(), target);
    const auto sz = axis_samples(in.z, out.z, v.spacing().z, target.z);
    const auto sy = axis_samples(in.y, out.y, v.spacing().y, target.y);
    const auto sx = axis_samples(in.x, out.x, v.spacing().x, target.x);

    // std::lerp stays within [a, b] for t in [0, 1] and is exact at t == 0.
    auto lerp = [](double a, double b, double t) { return std::lerp(a, b, t); };

    std::vector<float> voxels(out.count());
    std::size_t i = 0;
    for (const auto& z : sz) {
        for (const auto& y : sy) {
            for (const auto& x : sx) {
                auto row = [&](std::size_t iz, std::size_t iy) {
                    return lerp(v.at(iz, iy, x.lo), v.at(iz, iy, x.hi), x.frac);
                };
                const double c0 = lerp(row(z.lo, y.lo), row(z.lo, y.hi), y.frac);
                const double c1 = lerp(row(z.hi, y.lo), row(z.hi, y.hi), y.frac);
                voxels[i++] = static_cast<float>(lerp(c0, c1, z.frac));
            }
        }
    }
    return Volume(out, target, std::move(voxels), v.units());
}

Mask resample_nearest(const Mask& m, const Spacing& target) {
    require_positive(target);
    const Shape& in = m.shape();
    const Shape out = resampled_shape(in, m.spacing(), target);
    auto nearest = [](std::size_t n_in, std::size_t n_out, double from, double to) {
        std::vector<std::size_t> idx(n_out);
        for (std::size_t i = 0; i < n_out; ++i) {
            const double u = (static_cast<double>(i) + 0.5) * (to / from) - 0.5;
            const double r = std::floor(u + 0.5);
            idx[i] = static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(n_in - 1)));
        }
        return idx;
    };
    const auto nz = nearest(in.z, out.z, m.spacing().z, target.z);
    const auto ny = nearest(in.y, out.y, m.spacing().y, target.y);
    const auto nx = nearest(in.x, out.x, m.spacing().x, target.x);

    std::vector<std::uint8_t> labels(out.count());
    std::size_t i = 0;
    for (std::size_t z : nz)
        for (std::size_t y : ny)
            for (std::size_t x : nx) labels[i++] = m[in.index(z, y, x)];
    return Mask(out, target, std::move(labels), m.label_set());
}

}  // namespace ctaug
