#pragma once

/// @file ctv_io.hpp
/// @brief CTV container: a JSON header `<stem>.json` next to a raw voxel file
///        `<stem>.raw`, little-endian, z-major, x-fastest.
///
/// Header fields: schema "ctv/1", shape [z,y,x], spacing_mm [z,y,x],
/// dtype "i16" | "f32" | "u8", byte_order "le", data_file, and either units
/// (volumes) or labels (masks, dtype u8). Round trips are bit-exact.

#include <filesystem>
#include <string>

#include "ctaug/volume.hpp"

namespace ctaug {

inline constexpr const char* kCtvSchema = "ctv/1";

enum class CtvDtype { I16, F32, U8 };

std::string_view to_string(CtvDtype dtype);
CtvDtype ctv_dtype_from_string(std::string_view name);

/// Header path for a stem or header path ("case1" and "case1.json" both give
/// "case1.json").
std::filesystem::path ctv_header_path(const std::filesystem::path& path);
/// Raw data path ("case1.raw") for a stem or header path.
std::filesystem::path ctv_data_path(const std::filesystem::path& path);

/// Writes header and data, each through a temporary file renamed into place.
/// I16 requires every voxel to be an integer within int16 range
/// (PreconditionError otherwise). Throws IoError on filesystem failure.
void write_volume(const std::filesystem::path& path, const Volume& v, CtvDtype dtype = CtvDtype::F32);

/// Throws IoError when files are missing or truncated, ValidationError for a
/// malformed header.
Volume read_volume(const std::filesystem::path& path);

void write_mask(const std::filesystem::path& path, const Mask& m);
Mask read_mask(const std::filesystem::path& path);

/// Writes `contents` to `path` via a sibling temporary and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Whole file as bytes. Throws IoError.
std::string read_file(const std::filesystem::path& path);

}  // namespace ctaug
