#pragma once

/// @file spec_json.hpp
/// @brief JSON forms of specs and reports.
///
/// Parsers are strict: unknown keys and wrongly typed values raise
/// ValidationError, missing keys keep their defaults.

#include <filesystem>

#include <json.hpp>

#include "ctaug/artifact.hpp"
#include "ctaug/dataset_stats.hpp"
#include "ctaug/intensity.hpp"
#include "ctaug/metrics.hpp"
#include "ctaug/phantom.hpp"
#include "ctaug/windowing.hpp"

namespace ctaug {

using Json = nlohmann::json;

/// Parses a JSON file. IoError if unreadable, ValidationError if malformed.
Json load_json_file(const std::filesystem::path& path);

/// {base: {width, level}, level_range: [lo, hi], width_range: [lo, hi],
///  p_level, p_width, normalization: {mode, mean, std}, seed}
AugmentationSpec augmentation_spec_from_json(const Json& j);
Json to_json(const AugmentationSpec& spec);

/// {kind, range: [lo, hi], probability, anchor: "image_mean" | "window_center",
///  anchor_value, preserve_range}
IntensityTransform transform_from_json(const Json& j);
Json to_json(const IntensityTransform& t);

/// {transforms: [...], seed, identity}
Pipeline pipeline_from_json(const Json& j);
Json to_json(const Pipeline& p);

PhantomSpec phantom_spec_from_json(const Json& j);
Json to_json(const PhantomSpec& spec);

Json to_json(const ViewingWindow& w);
Json to_json(const SampledWindow& s);
Json to_json(const ArtifactReport& r);
Json to_json(const DifficultyFlags& f);
Json to_json(const CaseWindowEstimate& c);
Json to_json(const AugmentationRanges& r);
Json to_json(const InstanceMatchResult& r);
Json to_json(const SignificanceResult& r);
Json to_json(const Histogram& h);

}  // namespace ctaug
