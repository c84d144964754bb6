#include "ctaug/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctaug/error.hpp"
#include "ctaug/rng.hpp"

namespace ctaug {

namespace {

std::array<double, 3> voxel_center(const Shape& s, std::size_t z, std::size_t y, std::size_t x) {
    return {(static_cast<double>(z) + 0.5) / static_cast<double>(s.z),
            (static_cast<double>(y) + 0.5) / static_cast<double>(s.y),
            (static_cast<double>(x) + 0.5) / static_cast<double>(s.x)};
}

std::array<double, 3> extent_mm(const PhantomSpec& spec) {
    return {static_cast<double>(spec.shape.z) * spec.spacing.z, static_cast<double>(spec.shape.y) * spec.spacing.y,
            static_cast<double>(spec.shape.x) * spec.spacing.x};
}

bool inside_sphere(const TumorSphere& t, const std::array<double, 3>& p, const std::array<double, 3>& extent) {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double d = (p[a] - t.center[a]) * extent[a];
        d2 += d * d;
    }
    return d2 <= t.radius_mm * t.radius_mm;
}

void require_within_unit_box(const std::array<double, 3>& center, const std::array<double, 3>& half, const char* what) {
    for (int a = 0; a < 3; ++a) {
        if (center[a] - half[a] < 0.0 || center[a] + half[a] > 1.0) {
            throw ValidationError(std::string(what) + " extends outside the volume");
        }
    }
}

// Rasterized region index per voxel: 0 air, 1 body, 2 bone, 3 liver, 4 + k tumor k.
std::vector<int> rasterize(const PhantomSpec& spec, const std::vector<TumorSphere>& tumors) {
    const Shape& s = spec.shape;
    const auto extent = extent_mm(spec);
    std::vector<int> region(s.count(), 0);
    for (std::size_t z = 0; z < s.z; ++z) {
        for (std::size_t y = 0; y < s.y; ++y) {
            for (std::size_t x = 0; x < s.x; ++x) {
                const auto p = voxel_center(s, z, y, x);
                int r = 0;
                const double body_rho2 = spec.body.rho2(p);
                if (body_rho2 <= 1.0) r = 1;
                if (body_rho2 >= spec.bone_inner * spec.bone_inner && body_rho2 <= spec.bone_outer * spec.bone_outer) {
                    r = 2;
                }
                if (spec.liver.rho2(p) <= 1.0) r = 3;
                for (std::size_t k = 0; k < tumors.size(); ++k) {
                    if (inside_sphere(tumors[k], p, extent)) r = 4 + static_cast<int>(k);
                }
                region[s.index(z, y, x)] = r;
            }
        }
    }
    return region;
}

}  // namespace

double Ellipsoid::rho2(const std::array<double, 3>& p) const {
    double sum = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double d = (p[a] - center[a]) / radii[a];
        sum += d * d;
    }
    return sum;
}

std::vector<TumorSphere> PhantomSpec::resolved_tumors() const {
    if (!tumors.empty()) return tumors;
    const std::size_t k_total = tumor_offsets.size();
    if (k_total == 0) return {};
    const auto extent = extent_mm(*this);
    // A single slice is a 2D phantom: the z extent does not bound the radius.
    double min_liver_mm = liver.radii[2] * extent[2];
    for (int a = shape.z == 1 ? 1 : 0; a < 2; ++a) min_liver_mm = std::min(min_liver_mm, liver.radii[a] * extent[a]);
    const double pitch_mm = liver.radii[2] * extent[2] / static_cast<double>(k_total);
    const double radius = std::min(0.3 * min_liver_mm, 0.4 * pitch_mm);

    std::vector<TumorSphere> out;
    for (std::size_t k = 0; k < k_total; ++k) {
        TumorSphere t;
        t.center = liver.center;
        t.center[2] += liver.radii[2] * (-0.5 + (static_cast<double>(k) + 0.5) / static_cast<double>(k_total));
        t.radius_mm = radius;
        out.push_back(t);
    }
    return out;
}

void PhantomSpec::validate() const {
    if (shape.z == 0 || shape.y == 0 || shape.x == 0) throw ValidationError("phantom shape must be positive");
    if (!(spacing.z > 0.0 && spacing.y > 0.0 && spacing.x > 0.0)) {
        throw ValidationError("phantom spacing must be positive");
    }
    for (double hu : {body_hu, liver_hu, bone_hu, air_hu, ce_offset}) {
        if (!std::isfinite(hu)) throw ValidationError("phantom HU values must be finite");
    }
    for (double off : tumor_offsets) {
        if (!std::isfinite(off)) throw ValidationError("tumor offsets must be finite");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise_sigma must be >= 0");
    if (!tumors.empty() && tumors.size() != tumor_offsets.size()) {
        throw ValidationError("tumors must list one sphere per tumor offset");
    }
    if (!(0.0 < bone_inner && bone_inner < bone_outer && bone_outer <= 1.0)) {
        throw ValidationError("bone ring needs 0 < bone_inner < bone_outer <= 1");
    }
    for (const Ellipsoid* e : {&body, &liver}) {
        for (double r : e->radii) {
            if (!(r > 0.0)) throw ValidationError("ellipsoid radii must be positive");
        }
    }
    require_within_unit_box(body.center, body.radii, "body");
    require_within_unit_box(liver.center, liver.radii, "liver");

    const auto extent = extent_mm(*this);
    const auto placed = resolved_tumors();
    for (const auto& t : placed) {
        if (!(t.radius_mm > 0.0)) throw ValidationError("tumor radius must be positive");
        const double half_z = shape.z == 1 ? 0.0 : t.radius_mm / extent[0];
        require_within_unit_box(t.center, {half_z, t.radius_mm / extent[1], t.radius_mm / extent[2]}, "tumor");
    }

    const auto region = rasterize(*this, placed);
    const Shape& s = shape;
    std::vector<std::size_t> tumor_voxels(placed.size(), 0);
    std::size_t liver_voxels = 0;
    for (std::size_t z = 0; z < s.z; ++z) {
        for (std::size_t y = 0; y < s.y; ++y) {
            for (std::size_t x = 0; x < s.x; ++x) {
                const auto p = voxel_center(s, z, y, x);
                const bool in_liver = liver.rho2(p) <= 1.0;
                if (in_liver && body.rho2(p) >= bone_inner * bone_inner) {
                    throw ValidationError("liver must lie inside the bone ring");
                }
                const int r = region[s.index(z, y, x)];
                if (r == 3) ++liver_voxels;
                if (r < 4) continue;
                ++tumor_voxels[static_cast<std::size_t>(r - 4)];
                // Strictly inside: every face neighbour is liver or tumor.
                const long nz = static_cast<long>(s.z), ny = static_cast<long>(s.y), nx = static_cast<long>(s.x);
                const long zi = static_cast<long>(z), yi = static_cast<long>(y), xi = static_cast<long>(x);
                const long nbrs[6][3] = {{zi - 1, yi, xi}, {zi + 1, yi, xi}, {zi, yi - 1, xi},
                                         {zi, yi + 1, xi}, {zi, yi, xi - 1}, {zi, yi, xi + 1}};
                for (const auto& n : nbrs) {
                    const bool outside = n[0] < 0 || n[1] < 0 || n[2] < 0 || n[0] >= nz || n[1] >= ny || n[2] >= nx;
                    if (nz == 1 && (n[0] < 0 || n[0] >= nz)) continue;
                    if (outside || region[s.index(static_cast<std::size_t>(n[0]), static_cast<std::size_t>(n[1]),
                                                  static_cast<std::size_t>(n[2]))] < 3) {
                        throw ValidationError("tumor " + std::to_string(r - 4) +
                                              " is not strictly inside the liver");
                    }
                }
            }
        }
    }
    if (liver_voxels == 0) throw ValidationError("liver rasterizes to no voxels");
    for (std::size_t k = 0; k < tumor_voxels.size(); ++k) {
        if (tumor_voxels[k] == 0) {
            throw ValidationError("tumor " + std::to_string(k) + " rasterizes to no voxels at this resolution");
        }
    }
}

PhantomTissues tissue_hu(const PhantomSpec& spec) {
    PhantomTissues t{spec.air_hu, spec.body_hu, spec.bone_hu, spec.liver_hu + spec.ce_offset, {}};
    for (double off : spec.tumor_offsets) t.tumors.push_back(spec.liver_hu + off + spec.ce_offset);
    return t;
}

std::pair<Volume, Mask> generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const auto placed = spec.resolved_tumors();
    const auto region = rasterize(spec, placed);
    const auto tissues = tissue_hu(spec);

    std::vector<double> hu_of_region{tissues.air, tissues.body, tissues.bone, tissues.liver};
    hu_of_region.insert(hu_of_region.end(), tissues.tumors.begin(), tissues.tumors.end());

    const Shape& s = spec.shape;
    std::vector<float> voxels(s.count());
    std::vector<std::uint8_t> labels(s.count());
    for (std::size_t i = 0; i < region.size(); ++i) {
        const int r = region[i];
        labels[i] = r == 3 ? labels::kLiver : (r >= 4 ? labels::kTumor : labels::kBackground);
    }

    const std::size_t slice = s.y * s.x;
    const RandomStream root(spec.seed);
    for (std::size_t z = 0; z < s.z; ++z) {
        const std::size_t begin = z * slice;
        if (spec.noise_sigma == 0.0) {
            for (std::size_t i = begin; i < begin + slice; ++i) {
                voxels[i] = static_cast<float>(hu_of_region[static_cast<std::size_t>(region[i])]);
            }
            continue;
        }
        RandomStream rng = root.split(static_cast<std::uint64_t>(z));
        for (std::size_t i = begin; i < begin + slice; i += 2) {
            const auto [n0, n1] = rng.normal_pair();
            voxels[i] = static_cast<float>(hu_of_region[static_cast<std::size_t>(region[i])] + spec.noise_sigma * n0);
            if (i + 1 < begin + slice) {
                voxels[i + 1] =
                    static_cast<float>(hu_of_region[static_cast<std::size_t>(region[i + 1])] + spec.noise_sigma * n1);
            }
        }
    }

    return {Volume(s, spec.spacing, std::move(voxels), Units::HU), Mask(s, spec.spacing, std::move(labels))};
}

}  // namespace ctaug
