#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctaug/spec_json.hpp"

namespace ctaug::cli {

namespace fs = std::filesystem;

struct Common {
    unsigned jobs = 1;
    /// Where to write the run manifest; each command has a default.
    std::optional<fs::path> manifest;
};

/// Spec file plus flag overrides, merged into the effective spec.
struct SpecSource {
    std::optional<fs::path> file;
    Json overrides = Json::object();
};

struct PhantomArgs {
    SpecSource spec;
    fs::path out_dir;
    std::string case_id = "phantom";
    std::size_t count = 1;
};

struct StatsArgs {
    fs::path data;
    std::string label = "tumor";
    double coverage = 0.99;
    double alpha = 0.01;
    double base_width = 169.0;
    double base_level = 65.0;
    fs::path out;
    std::optional<fs::path> csv;
};

struct WindowArgs {
    fs::path in;
    SpecSource spec;
    fs::path out;
};

struct AugmentArgs {
    fs::path in;
    std::string method;
    SpecSource spec;
    std::optional<fs::path> pipeline;
    std::optional<std::vector<double>> range;
    double probability = 1.0;
    std::size_t count = 1;
    fs::path out_dir;
};

struct EvaluateArgs {
    fs::path pred;
    fs::path gt;
    std::optional<fs::path> ct;
    std::optional<fs::path> baseline_pred;
    double threshold = 0.10;
    int connectivity = 26;
    std::string overlap_rule = "per_side";
    std::string f1_mode = "counts";
    double min_tissue_difference = 20.0;
    double ce_low = 89.0;
    double ce_high = 137.0;
    fs::path out_dir;
};

struct ClassifyArgs {
    fs::path data;
    double min_tissue_difference = 20.0;
    double ce_low = 89.0;
    double ce_high = 137.0;
    std::optional<double> percentile;
    fs::path out;
    std::optional<fs::path> csv;
};

struct ArtifactArgs {
    std::optional<fs::path> before;
    std::optional<fs::path> after;
    std::optional<fs::path> in;
    std::string method;
    SpecSource spec;
    std::optional<fs::path> pipeline;
    std::optional<std::vector<double>> range;
    double probability = 1.0;
    std::size_t draws = 200;
    double tolerance = 1e-6;
    fs::path out;
};

struct HistogramArgs {
    fs::path in;
    std::size_t bins = 50;
    std::vector<double> range{0.0, 1.0};
    std::string stage = "base";
    std::string method;
    SpecSource spec;
    std::optional<fs::path> pipeline;
    std::optional<std::vector<double>> transform_range;
    double probability = 1.0;
    fs::path out_dir;
};

int run_phantom(const PhantomArgs& args, const Common& common, std::ostream& out);
int run_stats(const StatsArgs& args, const Common& common, std::ostream& out);
int run_window(const WindowArgs& args, const Common& common, std::ostream& out);
int run_augment(const AugmentArgs& args, const Common& common, std::ostream& out);
int run_evaluate(const EvaluateArgs& args, const Common& common, std::ostream& out);
int run_classify(const ClassifyArgs& args, const Common& common, std::ostream& out);
int run_artifact_check(const ArtifactArgs& args, const Common& common, std::ostream& out);
int run_histogram(const HistogramArgs& args, const Common& common, std::ostream& out);

}  // namespace ctaug::cli
