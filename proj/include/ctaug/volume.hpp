#pragma once

/// @file volume.hpp
/// @brief Core data model: CT volumes, label masks, viewing windows, HU
///        calibration and resampling.
///
/// Voxels are stored z-major, x-fastest: index = (z * ny + y) * nx + x.
/// Every type here is an immutable value once constructed.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctaug {

struct Shape {
    std::size_t z = 1;
    std::size_t y = 1;
    std::size_t x = 1;

    [[nodiscard]] constexpr std::size_t count() const { return z * y * x; }
    [[nodiscard]] constexpr std::size_t index(std::size_t iz, std::size_t iy, std::size_t ix) const {
        return (iz * y + iy) * x + ix;
    }
    friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

/// Voxel spacing in millimeters.
struct Spacing {
    double z = 1.0;
    double y = 1.0;
    double x = 1.0;

    friend constexpr bool operator==(const Spacing&, const Spacing&) = default;
};

enum class Units {
    HU,            ///< Hounsfield units
    Normalized01,  ///< every voxel in [0, 1]
    ZScore,        ///< (x - mean) / std with global statistics
    Rescaled,      ///< normalized intensities that may leave [0, 1] (e.g. after brightness shifts)
};

std::string_view to_string(Units units);
Units units_from_string(std::string_view name);

class Volume {
public:
    /// Throws ValidationError when the voxel count does not match the shape,
    /// a spacing component is not strictly positive, or Normalized01 data
    /// leaves [0, 1].
    Volume(Shape shape, Spacing spacing, std::vector<float> voxels, Units units);

    /// Widens 16-bit integer HU data.
    static Volume from_int16(Shape shape, Spacing spacing, std::span<const std::int16_t> voxels,
                             Units units = Units::HU);

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] const Spacing& spacing() const { return spacing_; }
    [[nodiscard]] Units units() const { return units_; }
    [[nodiscard]] std::span<const float> voxels() const { return voxels_; }
    [[nodiscard]] std::size_t size() const { return voxels_.size(); }
    [[nodiscard]] float at(std::size_t z, std::size_t y, std::size_t x) const {
        return voxels_[shape_.index(z, y, x)];
    }
    [[nodiscard]] float operator[](std::size_t i) const { return voxels_[i]; }

    /// Same geometry, new contents.
    [[nodiscard]] Volume with_voxels(std::vector<float> voxels, Units units) const;

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    Shape shape_;
    Spacing spacing_;
    std::vector<float> voxels_;
    Units units_;
};

/// Declared label set: value -> name.
using LabelSet = std::map<std::uint8_t, std::string>;

namespace labels {
constexpr std::uint8_t kBackground = 0;
constexpr std::uint8_t kLiver = 1;
constexpr std::uint8_t kTumor = 2;
}  // namespace labels

LabelSet default_label_set();

class Mask {
public:
    /// Throws ValidationError if sizes disagree or a voxel carries an undeclared label.
    Mask(Shape shape, Spacing spacing, std::vector<std::uint8_t> labels,
         LabelSet label_set = default_label_set());

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] const Spacing& spacing() const { return spacing_; }
    [[nodiscard]] std::span<const std::uint8_t> labels() const { return labels_; }
    [[nodiscard]] const LabelSet& label_set() const { return label_set_; }
    [[nodiscard]] std::size_t size() const { return labels_.size(); }
    [[nodiscard]] std::uint8_t operator[](std::size_t i) const { return labels_[i]; }
    [[nodiscard]] std::size_t count(std::uint8_t label) const;

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    Shape shape_;
    Spacing spacing_;
    std::vector<std::uint8_t> labels_;
    LabelSet label_set_;
};

/// Throws PreconditionError unless the mask has the volume's shape.
void require_aligned(const Volume& v, const Mask& m);

/// (width, level) in HU. Retains [level - width/2, level + width/2].
class ViewingWindow {
public:
    /// Throws ValidationError unless width > 0 and both are finite.
    ViewingWindow(double width, double level);

    static ViewingWindow from_bounds(double lower, double upper);

    [[nodiscard]] double width() const { return width_; }
    [[nodiscard]] double level() const { return level_; }
    [[nodiscard]] double lower() const { return level_ - width_ / 2.0; }
    [[nodiscard]] double upper() const { return level_ + width_ / 2.0; }
    [[nodiscard]] bool contains(double hu) const { return hu >= lower() && hu <= upper(); }

    friend bool operator==(const ViewingWindow&, const ViewingWindow&) = default;

private:
    double width_;
    double level_;
};

/// Sign convention for attenuation -> HU calibration.
///
/// Conventional puts water at 0 and air at -1000. Verbatim evaluates the
/// formula 1000 (mu - mu_water) / (mu_air - mu_water) as written, which puts
/// air at +1000.
enum class HuConvention { Conventional, Verbatim };

/// Throws PreconditionError when mu_air == mu_water.
double hu_from_attenuation(double mu, double mu_water, double mu_air,
                           HuConvention convention = HuConvention::Conventional);

/// Trilinear resampling onto a new voxel spacing. Voxel centers are aligned
/// (continuous index u_in = (i_out + 0.5) * target / spacing - 0.5) and
/// clamped to the input grid, so values never leave the input range.
Volume resample_trilinear(const Volume& v, const Spacing& target_spacing);

/// Nearest-neighbour counterpart of resample_trilinear for label masks.
Mask resample_nearest(const Mask& m, const Spacing& target_spacing);

/// Output shape for a resampling: round(n * spacing / target), at least 1.
Shape resampled_shape(const Shape& shape, const Spacing& spacing, const Spacing& target);

}  // namespace ctaug
