#include "app.hpp"

#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "commands.hpp"
#include "ctaug/error.hpp"

namespace ctaug::cli {

namespace {

// Collects flag values that override fields of a JSON spec. Every flag maps
// to exactly one JSON pointer.
class Overrides {
public:
    template <class T>
    CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app->add_option(flag, *value, help);
        entries_.push_back([opt, value, pointer](Json& j) {
            if (opt->count() > 0) j[Json::json_pointer(pointer)] = *value;
        });
        return opt;
    }

    Json* target = nullptr;

    void apply() const {
        for (const auto& e : entries_) e(*target);
    }

private:
    std::vector<std::function<void(Json&)>> entries_;
};

void add_augmentation_flags(CLI::App* app, Overrides& o, bool window_names) {
    if (window_names) {
        o.add<double>(app, "--width", "/base/width", "Window width W (HU)");
        o.add<double>(app, "--level", "/base/level", "Window level L (HU)");
    } else {
        o.add<double>(app, "--base-width", "/base/width", "Base window width (HU)");
        o.add<double>(app, "--base-level", "/base/level", "Base window level (HU)");
        o.add<std::vector<double>>(app, "--level-range", "/level_range", "Level sampling range LO HI")
            ->expected(2);
        o.add<std::vector<double>>(app, "--width-range", "/width_range", "Width sampling range LO HI")
            ->expected(2);
        o.add<double>(app, "--p-level", "/p_level", "Probability of shifting the level");
        o.add<double>(app, "--p-width", "/p_width", "Probability of scaling the width");
        o.add<std::uint64_t>(app, "--seed", "/seed", "Master seed");
    }
    o.add<std::string>(app, "--normalization", "/normalization/mode",
                       "minmax_sampled_window | fixed_base_affine | zscore_global");
    o.add<double>(app, "--zscore-mean", "/normalization/mean", "Global mean for zscore_global");
    o.add<double>(app, "--zscore-std", "/normalization/std", "Global std for zscore_global");
}

void add_phantom_flags(CLI::App* app, Overrides& o) {
    o.add<std::vector<std::size_t>>(app, "--shape", "/shape", "Volume shape Z Y X")->expected(3);
    o.add<std::vector<double>>(app, "--spacing-mm", "/spacing_mm", "Voxel spacing Z Y X (mm)")->expected(3);
    o.add<double>(app, "--body-hu", "/body_hu", "Body HU");
    o.add<double>(app, "--liver-hu", "/liver_hu", "Liver HU");
    o.add<std::vector<double>>(app, "--tumor-offsets", "/tumor_offsets", "Tumor HU offsets from the liver")
        ->expected(1, 64);
    o.add<double>(app, "--bone-hu", "/bone_hu", "Bone HU");
    o.add<double>(app, "--air-hu", "/air_hu", "Air HU");
    o.add<double>(app, "--ce-offset", "/ce_offset", "HU added to liver and tumors");
    o.add<double>(app, "--noise-sigma", "/noise_sigma", "Gaussian noise sigma (HU)");
    o.add<std::uint64_t>(app, "--seed", "/seed", "Noise seed");
}

void add_method_flags(CLI::App* app, std::string& method, std::optional<fs::path>& pipeline,
                      std::optional<std::vector<double>>& range, double& probability, const std::string& range_flag) {
    app->add_option("--method", method,
                    "random-window | rw-shift-scale | nnunet | unetr | equal-strength | pipeline | contrast | "
                    "brightness_multiplicative | brightness_additive | gamma | gamma_inverse");
    app->add_option("--pipeline", pipeline, "Pipeline JSON for --method pipeline");
    app->add_option(range_flag, range, "Parameter range LO HI for a single-transform method")->expected(2);
    app->add_option("--probability", probability, "Firing probability for a single-transform method")->capture_default_str();
}

int report_error(std::ostream& err, bool json_errors, int code, const char* kind, const std::string& message) {
    if (json_errors) {
        err << Json{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}}.dump() << "\n";
    } else {
        err << "ctaug: " << kind << " error: " << message << "\n";
    }
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"CT window augmentation toolkit", "ctaug"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(
#ifdef CTAUG_VERSION
                                          CTAUG_VERSION
#else
                                          "0.0.0"
#endif
                                          ));

    bool json_errors = false;
    Common common;
    std::optional<fs::path> manifest;
    app.add_flag("--json-errors", json_errors, "Report errors as JSON on stderr");
    app.add_option("--jobs", common.jobs, "Cases processed in parallel")->check(CLI::Range(1u, 1024u));
    app.add_option("--manifest", manifest, "Run manifest path (default: next to the outputs)");

    // Global options are also accepted after the subcommand name.
    app.fallthrough();

    std::function<int()> action;

    // phantom
    PhantomArgs phantom_args;
    Overrides phantom_flags;
    auto* phantom = app.add_subcommand("phantom", "Generate synthetic phantom volume/mask pairs");
    phantom->add_option("--spec", phantom_args.spec.file, "PhantomSpec JSON");
    phantom->add_option("--out-dir", phantom_args.out_dir, "Output directory")->required();
    phantom->add_option("--case-id", phantom_args.case_id, "Case id (prefix when --count > 1)")->capture_default_str();
    phantom->add_option("--count", phantom_args.count, "Number of cases")->capture_default_str();
    add_phantom_flags(phantom, phantom_flags);
    phantom_flags.target = &phantom_args.spec.overrides;
    phantom->callback([&] { action = [&] { return run_phantom(phantom_args, common, out); }; });

    // stats
    StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "Per-case and pooled window statistics");
    stats->add_option("--data", stats_args.data, "Directory of <id> volumes and <id>_mask masks")->required();
    stats->add_option("--label", stats_args.label, "liver | tumor | integer label")->capture_default_str();
    stats->add_option("--coverage", stats_args.coverage, "Central share of voxels inside the window")->capture_default_str();
    stats->add_option("--alpha", stats_args.alpha, "Tail quantile for augmentation ranges")->capture_default_str();
    stats->add_option("--base-width", stats_args.base_width, "Base window width the ranges must contain")->capture_default_str();
    stats->add_option("--base-level", stats_args.base_level, "Base window level the ranges must contain")->capture_default_str();
    stats->add_option("--out", stats_args.out, "Report JSON")->required();
    stats->add_option("--csv", stats_args.csv, "Per-case CSV");
    stats->callback([&] { action = [&] { return run_stats(stats_args, common, out); }; });

    // window
    WindowArgs window_args;
    Overrides window_flags;
    auto* window = app.add_subcommand("window", "Static window preprocessing");
    window->add_option("--in", window_args.in, "Input CTV volume (HU)")->required();
    window->add_option("--spec", window_args.spec.file, "AugmentationSpec JSON (base and normalization are used)");
    window->add_option("--out", window_args.out, "Output CTV stem")->required();
    add_augmentation_flags(window, window_flags, true);
    window_flags.target = &window_args.spec.overrides;
    window->callback([&] { action = [&] { return run_window(window_args, common, out); }; });

    // augment
    AugmentArgs augment_args;
    Overrides augment_flags;
    auto* augment = app.add_subcommand("augment", "Draw augmented samples");
    augment->add_option("--in", augment_args.in, "Input CTV volume or directory of volumes")->required();
    augment->add_option("--spec", augment_args.spec.file, "AugmentationSpec JSON");
    augment->add_option("--count", augment_args.count, "Samples per input")->capture_default_str();
    augment->add_option("--out-dir", augment_args.out_dir, "Output directory")->required();
    add_method_flags(augment, augment_args.method, augment_args.pipeline, augment_args.range,
                     augment_args.probability, "--range");
    augment->get_option("--method")->required();
    add_augmentation_flags(augment, augment_flags, false);
    augment_flags.target = &augment_args.spec.overrides;
    augment->callback([&] { action = [&] { return run_augment(augment_args, common, out); }; });

    // evaluate
    EvaluateArgs evaluate_args;
    auto* evaluate = app.add_subcommand("evaluate", "Segmentation metrics with difficulty subsets");
    evaluate->add_option("--pred", evaluate_args.pred, "Directory of predicted masks")->required();
    evaluate->add_option("--gt", evaluate_args.gt, "Directory of ground-truth masks")->required();
    evaluate->add_option("--ct", evaluate_args.ct, "Directory of CT volumes for difficulty subsets");
    evaluate->add_option("--baseline-pred", evaluate_args.baseline_pred, "Baseline predictions for a paired test");
    evaluate->add_option("--threshold", evaluate_args.threshold, "Lesion overlap threshold (strict)")->capture_default_str();
    evaluate->add_option("--connectivity", evaluate_args.connectivity, "6 | 18 | 26")->capture_default_str();
    evaluate->add_option("--overlap-rule", evaluate_args.overlap_rule, "per_side | gt_size | pred_size")->capture_default_str();
    evaluate->add_option("--f1-mode", evaluate_args.f1_mode, "counts | symmetric")->capture_default_str();
    evaluate->add_option("--min-tissue-difference", evaluate_args.min_tissue_difference, "HU")->capture_default_str();
    evaluate->add_option("--ce-low", evaluate_args.ce_low, "HU")->capture_default_str();
    evaluate->add_option("--ce-high", evaluate_args.ce_high, "HU")->capture_default_str();
    evaluate->add_option("--out-dir", evaluate_args.out_dir, "Output directory")->required();
    evaluate->callback([&] { action = [&] { return run_evaluate(evaluate_args, common, out); }; });

    // classify
    ClassifyArgs classify_args;
    auto* classify = app.add_subcommand("classify", "Difficulty flags per case");
    classify->add_option("--data", classify_args.data, "Directory of <id> volumes and <id>_mask masks")->required();
    classify->add_option("--min-tissue-difference", classify_args.min_tissue_difference, "HU")->capture_default_str();
    classify->add_option("--ce-low", classify_args.ce_low, "HU")->capture_default_str();
    classify->add_option("--ce-high", classify_args.ce_high, "HU")->capture_default_str();
    classify->add_option("--percentile", classify_args.percentile, "Also flag this share of cases in each tail");
    classify->add_option("--out", classify_args.out, "Report JSON")->required();
    classify->add_option("--csv", classify_args.csv, "Per-case CSV");
    classify->callback([&] { action = [&] { return run_classify(classify_args, common, out); }; });

    // artifact-check
    ArtifactArgs artifact_args;
    Overrides artifact_flags;
    auto* artifact = app.add_subcommand("artifact-check", "Clipping-artifact check for a pair or a method");
    artifact->add_option("--before", artifact_args.before, "Reference CTV volume");
    artifact->add_option("--after", artifact_args.after, "Transformed CTV volume");
    artifact->add_option("--in", artifact_args.in, "Raw HU volume for method simulation");
    artifact->add_option("--spec", artifact_args.spec.file, "AugmentationSpec JSON");
    artifact->add_option("--draws", artifact_args.draws, "Simulated draws")->capture_default_str();
    artifact->add_option("--tolerance", artifact_args.tolerance, "Displacement tolerance")->capture_default_str();
    artifact->add_option("--out", artifact_args.out, "Report JSON")->required();
    add_method_flags(artifact, artifact_args.method, artifact_args.pipeline, artifact_args.range,
                     artifact_args.probability, "--range");
    add_augmentation_flags(artifact, artifact_flags, false);
    artifact_flags.target = &artifact_args.spec.overrides;
    artifact->callback([&] { action = [&] { return run_artifact_check(artifact_args, common, out); }; });

    // histogram
    HistogramArgs histogram_args;
    Overrides histogram_flags;
    auto* hist = app.add_subcommand("histogram", "Histograms before/after a transform");
    hist->add_option("--in", histogram_args.in, "Input CTV volume (HU)")->required();
    hist->add_option("--bins", histogram_args.bins, "Number of bins")->capture_default_str();
    hist->add_option("--range", histogram_args.range, "Histogram range LO HI")->capture_default_str()->expected(2);
    hist->add_option("--stage", histogram_args.stage, "raw | base: what the 'before' histogram shows")->capture_default_str();
    hist->add_option("--spec", histogram_args.spec.file, "AugmentationSpec JSON");
    hist->add_option("--out-dir", histogram_args.out_dir, "Output directory")->required();
    add_method_flags(hist, histogram_args.method, histogram_args.pipeline, histogram_args.transform_range,
                     histogram_args.probability, "--transform-range");
    add_augmentation_flags(hist, histogram_flags, false);
    histogram_flags.target = &histogram_args.spec.overrides;
    hist->callback([&] { action = [&] { return run_histogram(histogram_args, common, out); }; });

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.emplace_back("ctaug");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return report_error(err, json_errors, kExitValidation, "usage", e.what());
    }

    for (Overrides* o : {&phantom_flags, &window_flags, &augment_flags, &artifact_flags, &histogram_flags}) o->apply();
    common.manifest = manifest;

    try {
        if (!action) return report_error(err, json_errors, kExitValidation, "usage", "no command given");
        return action();
    } catch (const ValidationError& e) {
        return report_error(err, json_errors, kExitValidation, "validation", e.what());
    } catch (const IoError& e) {
        return report_error(err, json_errors, kExitIo, "io", e.what());
    } catch (const PreconditionError& e) {
        return report_error(err, json_errors, kExitPrecondition, "precondition", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return report_error(err, json_errors, kExitIo, "io", e.what());
    } catch (const std::exception& e) {
        return report_error(err, json_errors, kExitInternal, "internal", e.what());
    }
}

}  // namespace ctaug::cli
