#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "ctaug/artifact.hpp"
#include "ctaug/ctv_io.hpp"
#include "ctaug/dataset_stats.hpp"
#include "ctaug/error.hpp"
#include "ctaug/intensity.hpp"
#include "ctaug/metrics.hpp"
#include "ctaug/phantom.hpp"
#include "ctaug/rng.hpp"
#include "ctaug/windowing.hpp"
#include "manifest.hpp"

namespace ctaug::cli {

namespace {

constexpr const char* kMaskSuffix = "_mask";

// Runs fn(i) for i in [0, n) on up to `jobs` threads. If any call throws, the
// exception of the lowest index is rethrown, so failures do not depend on
// scheduling.
template <class Fn>
void parallel_indices(std::size_t n, unsigned jobs, Fn fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), std::max<std::size_t>(n, 1)));
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct CtvEntry {
    std::string id;
    fs::path stem;
};

// CTV headers in `dir`, split into volumes and masks, sorted by id. Mask ids
// drop a trailing "_mask".
struct Listing {
    std::vector<CtvEntry> volumes;
    std::map<std::string, fs::path> masks;
};

Listing list_ctv(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    Listing listing;
    std::vector<fs::path> headers;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") headers.push_back(entry.path());
    }
    std::sort(headers.begin(), headers.end());
    for (const auto& h : headers) {
        Json doc;
        try {
            doc = Json::parse(read_file(h));
        } catch (const Json::parse_error&) {
            continue;
        }
        if (!doc.is_object() || doc.value("schema", "") != kCtvSchema) continue;
        fs::path stem = h;
        stem.replace_extension();
        std::string id = stem.filename().string();
        if (doc.value("dtype", "") == "u8") {
            if (id.size() > std::char_traits<char>::length(kMaskSuffix) && id.ends_with(kMaskSuffix)) {
                id.resize(id.size() - std::char_traits<char>::length(kMaskSuffix));
            }
            listing.masks[id] = stem;
        } else {
            listing.volumes.push_back({id, stem});
        }
    }
    return listing;
}

struct Case {
    std::string id;
    fs::path volume;
    fs::path mask;
};

std::vector<Case> paired_cases(const fs::path& dir) {
    const Listing listing = list_ctv(dir);
    std::vector<Case> cases;
    for (const auto& v : listing.volumes) {
        const auto it = listing.masks.find(v.id);
        if (it == listing.masks.end()) throw IoError("no mask " + v.id + kMaskSuffix + " for volume " + v.stem.string());
        cases.push_back({v.id, v.stem, it->second});
    }
    if (cases.empty()) throw IoError("no CTV volume/mask pairs in " + dir.string());
    return cases;
}

Json load_spec_json(const SpecSource& source) {
    Json j = source.file ? load_json_file(*source.file) : Json::object();
    if (!j.is_object()) throw ValidationError("spec file must hold a JSON object");
    j.merge_patch(source.overrides);
    return j;
}

void write_text(const fs::path& path, const std::string& text, RunManifest& manifest) {
    write_file_atomic(path, text);
    manifest.add_output(path);
}

void write_json(const fs::path& path, const Json& j, RunManifest& manifest) {
    write_text(path, j.dump(2) + "\n", manifest);
}

fs::path manifest_path(const Common& common, const fs::path& fallback) {
    return common.manifest.value_or(fallback);
}

// "w.json" and "w" both give "w.manifest.json".
fs::path sibling_manifest(const fs::path& file) {
    fs::path p = file;
    if (p.extension() == ".json") p.replace_extension();
    p += ".manifest.json";
    return p;
}

CtvDtype storage_dtype(const Volume& v) {
    if (v.units() != Units::HU) return CtvDtype::F32;
    const bool integral = std::all_of(v.voxels().begin(), v.voxels().end(), [](float f) {
        return f == std::nearbyint(f) && f >= -32768.0f && f <= 32767.0f;
    });
    return integral ? CtvDtype::I16 : CtvDtype::F32;
}

// ---- augmentation methods ----------------------------------------------------

enum class MethodKind { RandomWindow, RwShiftScale, PipelineAfterBase };

struct Method {
    std::string name;
    MethodKind kind = MethodKind::RandomWindow;
    Pipeline pipeline;
    Json describe() const {
        Json j = {{"name", name}};
        if (kind == MethodKind::PipelineAfterBase) j["pipeline"] = to_json(pipeline);
        return j;
    }
};

Method resolve_method(const std::string& name, const AugmentationSpec& spec, const std::optional<fs::path>& pipeline_file,
                      const std::optional<std::vector<double>>& range, double probability) {
    Method m;
    m.name = name;
    if (name == "random-window") return m;
    if (name == "rw-shift-scale") {
        m.kind = MethodKind::RwShiftScale;
        if (spec.normalization == NormalizationMode::MinMaxSampledWindow) {
            throw ValidationError(
                "rw-shift-scale needs --normalization fixed_base_affine or zscore_global");
        }
        return m;
    }
    m.kind = MethodKind::PipelineAfterBase;
    if (name == "nnunet") {
        m.pipeline = preset_nnunet();
    } else if (name == "unetr") {
        m.pipeline = preset_unetr();
    } else if (name == "equal-strength") {
        if (spec.normalization != NormalizationMode::ZScoreGlobal) {
            throw ValidationError("equal-strength needs --normalization zscore_global with its mean and std");
        }
        m.pipeline = equal_strength_shift_scale(spec.level_min, spec.level_max, spec.width_min, spec.width_max,
                                                spec.base.level(), spec.base.width(), spec.zscore.std,
                                                std::max(spec.p_level, spec.p_width));
    } else if (name == "pipeline") {
        if (!pipeline_file) throw ValidationError("method 'pipeline' needs --pipeline FILE");
        m.pipeline = pipeline_from_json(load_json_file(*pipeline_file));
    } else {
        IntensityTransform t;
        t.kind = transform_kind_from_string(name);
        if (!range || range->size() != 2) {
            throw ValidationError("single transform '" + name + "' needs --range LO HI");
        }
        t.lo = (*range)[0];
        t.hi = (*range)[1];
        t.probability = probability;
        if (t.kind == TransformKind::Contrast) t.anchor = WindowCenterAnchor{};
        m.pipeline.transforms = {t};
        m.pipeline.validate();
    }
    return m;
}

struct MethodOutput {
    Volume out;
    std::optional<SampledWindow> window;
};

MethodOutput apply_method(const Volume& raw, const Method& m, const AugmentationSpec& spec, RandomStream& rng) {
    switch (m.kind) {
        case MethodKind::RandomWindow: {
            SampledWindow s{spec.base};
            Volume out = random_windowing(raw, spec, rng, &s);
            return {std::move(out), s};
        }
        case MethodKind::RwShiftScale: {
            SampledWindow s{spec.base};
            Volume out = rw_shift_scale(raw, spec, rng, &s);
            return {std::move(out), s};
        }
        case MethodKind::PipelineAfterBase:
            return {run_pipeline(base_windowing(raw, spec), m.pipeline, rng), std::nullopt};
    }
    throw Error("unknown method kind");
}

AugmentationSpec parse_aug_spec(const SpecSource& source, Json* effective) {
    const AugmentationSpec spec = augmentation_spec_from_json(load_spec_json(source));
    if (effective != nullptr) *effective = to_json(spec);
    return spec;
}

RandomStream case_stream(std::uint64_t seed, const std::string& case_id, std::uint64_t sample) {
    return RandomStream(seed).split(case_id).split(sample);
}

// ---- small statistics helpers ---------------------------------------------------

Json mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {{"mean", nullptr}, {"std", nullptr}, {"n", 0}};
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {{"mean", mean}, {"std", sd}, {"n", xs.size()}};
}

std::string csv_number(double x) {
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
}

std::uint8_t parse_label(const std::string& label) {
    if (label == "liver") return labels::kLiver;
    if (label == "tumor") return labels::kTumor;
    try {
        const int v = std::stoi(label);
        if (v >= 0 && v <= 255) return static_cast<std::uint8_t>(v);
    } catch (const std::exception&) {
    }
    throw ValidationError("label must be 'liver', 'tumor' or an integer in [0, 255]");
}

}  // namespace

// ---- phantom --------------------------------------------------------------------

int run_phantom(const PhantomArgs& args, const Common& common, std::ostream& out) {
    RunManifest manifest("phantom");
    if (args.spec.file) manifest.add_input(*args.spec.file);
    const PhantomSpec spec = phantom_spec_from_json(load_spec_json(args.spec));
    if (args.count == 0) throw ValidationError("--count must be >= 1");
    manifest.set_spec("phantom", to_json(spec));
    manifest.set_seed(spec.seed);
    manifest.set_parameters({{"count", args.count}, {"case_id", args.case_id}});

    std::vector<std::string> ids(args.count);
    parallel_indices(args.count, common.jobs, [&](std::size_t k) {
        PhantomSpec s = spec;
        std::string id = args.case_id;
        if (args.count > 1) {
            std::ostringstream name;
            name << args.case_id << '_' << std::setw(3) << std::setfill('0') << k;
            id = name.str();
            s.seed = derive_seed(spec.seed, k);
        }
        const auto [volume, mask] = generate_phantom(s);
        write_volume(args.out_dir / id, volume, storage_dtype(volume));
        write_mask(args.out_dir / (id + kMaskSuffix), mask);
        ids[k] = id;
    });
    for (const auto& id : ids) {
        manifest.add_ctv_output(args.out_dir / id);
        manifest.add_ctv_output(args.out_dir / (id + kMaskSuffix));
    }
    manifest.write(manifest_path(common, args.out_dir / "manifest.json"));
    out << "wrote " << ids.size() << " phantom case(s) to " << args.out_dir.string() << "\n";
    return 0;
}

// ---- stats ----------------------------------------------------------------------

int run_stats(const StatsArgs& args, const Common& common, std::ostream& out) {
    RunManifest manifest("stats");
    const std::uint8_t label = parse_label(args.label);
    const ViewingWindow base(args.base_width, args.base_level);
    const auto cases = paired_cases(args.data);

    struct PerCase {
        std::optional<CaseWindowEstimate> window;
        QuantileBuffer values;
        RunningMoments moments;
    };
    std::vector<PerCase> results(cases.size());
    parallel_indices(cases.size(), common.jobs, [&](std::size_t i) {
        const Volume v = read_volume(cases[i].volume);
        const Mask m = read_mask(cases[i].mask);
        if (v.units() != Units::HU) throw PreconditionError(cases[i].id + ": stats expects HU volumes");
        const auto values = labeled_values(v, m, label);
        if (values.empty()) return;
        results[i].values.add(values);
        results[i].moments.add(values);
        results[i].window = case_window(v, m, label, args.coverage, cases[i].id);
    });

    QuantileBuffer pooled;
    RunningMoments moments;
    std::vector<CaseWindowEstimate> per_case;
    Json skipped = Json::array();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        manifest.add_ctv_input(cases[i].volume);
        manifest.add_ctv_input(cases[i].mask);
        if (!results[i].window) {
            skipped.push_back(cases[i].id);
            continue;
        }
        pooled.merge(results[i].values);
        moments.merge(results[i].moments);
        per_case.push_back(*results[i].window);
    }
    if (per_case.empty()) throw PreconditionError("no case contains the requested label");

    Json report = {{"label", label}, {"coverage", args.coverage}, {"skipped_cases", skipped}};
    Json case_list = Json::array();
    for (const auto& c : per_case) case_list.push_back(to_json(c));
    report["cases"] = case_list;
    const auto pooled_bounds = coverage_bounds(pooled, args.coverage);
    report["pooled"] = {{"width", pooled_bounds.window.width()},
                        {"level", pooled_bounds.window.level()},
                        {"lower_hu", pooled_bounds.lower},
                        {"upper_hu", pooled_bounds.upper},
                        {"voxel_count", pooled.size()}};
    report["intensity"] = {{"mean", moments.mean()}, {"std", moments.stddev()}, {"voxel_count", moments.count()}};
    if (per_case.size() >= 2) {
        Json ranges = to_json(derive_aug_ranges(per_case, base, args.alpha));
        ranges["alpha"] = args.alpha;
        ranges["base"] = to_json(base);
        report["augmentation_ranges"] = ranges;
    } else {
        report["augmentation_ranges"] = nullptr;
    }
    write_json(args.out, report, manifest);

    if (args.csv) {
        std::string csv = "case_id,width,level,lower_hu,upper_hu,voxel_count\n";
        for (const auto& c : per_case) {
            csv += c.case_id + ',' + csv_number(c.window.width()) + ',' + csv_number(c.window.level()) + ',' +
                   csv_number(c.lower_hu) + ',' + csv_number(c.upper_hu) + ',' + std::to_string(c.voxel_count) + '\n';
        }
        write_text(*args.csv, csv, manifest);
    }
    manifest.set_parameters({{"label", label}, {"coverage", args.coverage}, {"alpha", args.alpha},
                             {"base", to_json(base)}, {"data", args.data.string()}});
    manifest.write(manifest_path(common, sibling_manifest(args.out)));
    out << "stats: " << per_case.size() << " case(s), pooled W=" << pooled_bounds.window.width()
        << " L=" << pooled_bounds.window.level() << "\n";
    return 0;
}

// ---- window ---------------------------------------------------------------------

int run_window(const WindowArgs& args, const Common& common, std::ostream& out) {
    RunManifest manifest("window");
    if (args.spec.file) manifest.add_input(*args.spec.file);
    Json j = load_spec_json(args.spec);
    // Static windowing only needs base and normalization; unset sampling
    // ranges collapse onto the base so any base window validates.
    AugmentationSpec defaults;
    const Json base = j.value("base", Json::object());
    const double w = base.value("width", defaults.base.width());
    const double l = base.value("level", defaults.base.level());
    if (!j.contains("width_range")) j["width_range"] = {w, w};
    if (!j.contains("level_range")) j["level_range"] = {l, l};
    Json effective;
    const AugmentationSpec spec = parse_aug_spec({std::nullopt, j}, &effective);
    manifest.set_spec("augmentation", effective);

    const Volume v = read_volume(args.in);
    manifest.add_ctv_input(args.in);
    const Volume windowed = base_windowing(v, spec);
    write_volume(args.out, windowed, CtvDtype::F32);
    manifest.add_ctv_output(args.out);
    manifest.write(manifest_path(common, sibling_manifest(ctv_header_path(args.out))));
    out << "window W=" << spec.base.width() << " L=" << spec.base.level() << " -> " << ctv_header_path(args.out).string()
        << "\n";
    return 0;
}

// ---- augment --------------------------------------------------------------------

int run_augment(const AugmentArgs& args, const Common& common, std::ostream& out) {
    RunManifest manifest("augment");
    if (args.spec.file) manifest.add_input(*args.spec.file);
    if (args.pipeline) manifest.add_input(*args.pipeline);
    Json effective;
    const AugmentationSpec spec = parse_aug_spec(args.spec, &effective);
    const Method method = resolve_method(args.method, spec, args.pipeline, args.range, args.probability);
    if (args.count == 0) throw ValidationError("--count must be >= 1");
    manifest.set_spec("augmentation", effective);
    manifest.set_seed(spec.seed);
    manifest.set_parameters({{"method", method.describe()}, {"count", args.count}});

    std::vector<CtvEntry> inputs;
    if (fs::is_directory(args.in)) {
        inputs = list_ctv(args.in).volumes;
        if (inputs.empty()) throw IoError("no CTV volumes in " + args.in.string());
    } else {
        fs::path stem = ctv_header_path(args.in);
        stem.replace_extension();
        inputs.push_back({stem.filename().string(), stem});
    }

    std::vector<Json> records(inputs.size());
    parallel_indices(inputs.size(), common.jobs, [&](std::size_t i) {
        const Volume raw = read_volume(inputs[i].stem);
        Json samples = Json::array();
        for (std::size_t k = 0; k < args.count; ++k) {
            RandomStream rng = case_stream(spec.seed, inputs[i].id, k);
            const MethodOutput result = apply_method(raw, method, spec, rng);
            const std::string name = inputs[i].id + "_s" + std::to_string(k);
            write_volume(args.out_dir / name, result.out, CtvDtype::F32);
            Json record = {{"case_id", inputs[i].id}, {"sample", k}, {"output", name}};
            if (result.window) record["window"] = to_json(*result.window);
            samples.push_back(record);
        }
        records[i] = samples;
    });

    Json all = Json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        manifest.add_ctv_input(inputs[i].stem);
        for (const auto& r : records[i]) {
            manifest.add_ctv_output(args.out_dir / r["output"].get<std::string>());
            all.push_back(r);
        }
    }
    write_json(args.out_dir / "samples.json", {{"method", method.describe()}, {"samples", all}}, manifest);
    manifest.write(manifest_path(common, args.out_dir / "manifest.json"));
    out << "augment " << method.name << ": " << all.size() << " sample(s) in " << args.out_dir.string() << "\n";
    return 0;
}

// ---- evaluate -------------------------------------------------------------------

namespace {

Connectivity connectivity_from(int n) {
    switch (n) {
        case 6: return Connectivity::Face6;
        case 18: return Connectivity::Edge18;
        case 26: return Connectivity::Vertex26;
        default: throw ValidationError("--connectivity must be 6, 18 or 26");
    }
}

OverlapRule overlap_rule_from(const std::string& s) {
    if (s == "per_side") return OverlapRule::PerSide;
    if (s == "gt_size") return OverlapRule::GtLesionSize;
    if (s == "pred_size") return OverlapRule::PredComponentSize;
    throw ValidationError("--overlap-rule must be per_side, gt_size or pred_size");
}

F1Mode f1_mode_from(const std::string& s) {
    if (s == "counts") return F1Mode::DetectionCounts;
    if (s == "symmetric") return F1Mode::Symmetric;
    throw ValidationError("--f1-mode must be counts or symmetric");
}

struct CaseScores {
    double dice_liver = 0.0;
    double dice_tumor = 0.0;
    InstanceMatchResult lesions;
};

CaseScores score(const Mask& pred, const Mask& gt, const LesionMatchOptions& options) {
    if (!(pred.shape() == gt.shape())) throw PreconditionError("prediction and ground truth shapes differ");
    CaseScores s;
    s.dice_liver = dice(BinaryMask::from_nonzero(pred), BinaryMask::from_nonzero(gt));
    const auto pred_tumor = BinaryMask::from_label(pred, labels::kTumor);
    const auto gt_tumor = BinaryMask::from_label(gt, labels::kTumor);
    s.dice_tumor = dice(pred_tumor, gt_tumor);
    s.lesions = lesion_instance_metrics(pred_tumor, gt_tumor, options);
    return s;
}

}  // namespace

int run_evaluate(const EvaluateArgs& args, const Common& common, std::ostream& out) {
    RunManifest manifest("evaluate");
    LesionMatchOptions options;
    options.overlap_threshold = args.threshold;
    options.connectivity = connectivity_from(args.connectivity);
    options.rule = overlap_rule_from(args.overlap_rule);
    options.f1_mode = f1_mode_from(args.f1_mode);
    if (!(args.threshold >= 0.0 && args.threshold < 1.0)) throw ValidationError("--threshold must be in [0, 1)");
    const DifficultyThresholds thresholds{args.min_tissue_difference, args.ce_low, args.ce_high};

    const auto gt_masks = list_ctv(args.gt).masks;
    const auto pred_masks = list_ctv(args.pred).masks;
    std::map<std::string, fs::path> baseline_masks;
    if (args.baseline_pred) baseline_masks = list_ctv(*args.baseline_pred).masks;
    std::map<std::string, fs::path> ct_volumes;
    if (args.ct) {
        for (const auto& v : list_ctv(*args.ct).volumes) ct_volumes[v.id] = v.stem;
    }
    if (gt_masks.empty()) throw IoError("no ground-truth masks in " + args.gt.string());

    std::vector<std::string> ids;
    for (const auto& [id, path] : gt_masks) {
        if (!pred_masks.count(id)) throw IoError("no prediction for case " + id);
        if (args.baseline_pred && !baseline_masks.count(id)) throw IoError("no baseline prediction for case " + id);
        if (args.ct && !ct_volumes.count(id)) throw IoError("no CT volume for case " + id);
        ids.push_back(id);
    }

    struct Row {
        CaseScores scores;
        std::optional<CaseScores> baseline;
        std::optional<DifficultyFlags> flags;
    };
    std::vector<Row> rows(ids.size());
    parallel_indices(ids.size(), common.jobs, [&](std::size_t i) {
        const Mask gt = read_mask(gt_masks.at(ids[i]));
        rows[i].scores = score(read_mask(pred_masks.at(ids[i])), gt, options);
        if (args.baseline_pred) rows[i].baseline = score(read_mask(baseline_masks.at(ids[i])), gt, options);
        if (args.ct) {
            const Volume v = read_volume(ct_volumes.at(ids[i]));
            rows[i].flags = classify_difficulty(v, gt, thresholds);
        }
    });

    for (std::size_t i = 0; i < ids.size(); ++i) {
        manifest.add_ctv_input(gt_masks.at(ids[i]));
        manifest.add_ctv_input(pred_masks.at(ids[i]));
        if (args.baseline_pred) manifest.add_ctv_input(baseline_masks.at(ids[i]));
        if (args.ct) manifest.add_ctv_input(ct_volumes.at(ids[i]));
    }

    std::string csv =
        "case_id,dice_liver,dice_tumor,lesion_f1,lesion_recall,lesion_precision,tp,fp,fn,low_hu_contrast,poor_ce_timing\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& s = rows[i].scores;
        auto flag = [&](bool DifficultyFlags::*field) -> std::string {
            return rows[i].flags ? (rows[i].flags.value().*field ? "1" : "0") : "";
        };
        csv += ids[i] + ',' + csv_number(s.dice_liver) + ',' + csv_number(s.dice_tumor) + ',' +
               csv_number(s.lesions.f1) + ',' + csv_number(s.lesions.recall) + ',' + csv_number(s.lesions.precision) +
               ',' + std::to_string(s.lesions.true_positives) + ',' + std::to_string(s.lesions.false_positives) + ',' +
               std::to_string(s.lesions.false_negatives) + ',' + flag(&DifficultyFlags::low_hu_contrast) + ',' +
               flag(&DifficultyFlags::poor_ce_timing) + '\n';
    }
    write_text(args.out_dir / "cases.csv", csv, manifest);

    using Selector = bool (*)(const Row&);
    std::vector<std::pair<std::string, Selector>> subsets = {{"all", [](const Row&) { return true; }}};
    if (args.ct) {
        subsets.emplace_back("low_hu_contrast", [](const Row& r) { return r.flags->low_hu_contrast; });
        subsets.emplace_back("poor_ce_timing", [](const Row& r) { return r.flags->poor_ce_timing; });
    }
    using Metric = double (*)(const CaseScores&);
    const std::vector<std::pair<std::string, Metric>> metrics = {
        {"dice_liver", [](const CaseScores& s) { return s.dice_liver; }},
        {"dice_tumor", [](const CaseScores& s) { return s.dice_tumor; }},
        {"lesion_f1", [](const CaseScores& s) { return s.lesions.f1; }},
        {"lesion_recall", [](const CaseScores& s) { return s.lesions.recall; }},
        {"lesion_precision", [](const CaseScores& s) { return s.lesions.precision; }},
    };

    Json aggregate = {{"cases", ids.size()},
                      {"lesion_matching",
                       {{"threshold", args.threshold},
                        {"connectivity", args.connectivity},
                        {"overlap_rule", args.overlap_rule},
                        {"f1_mode", args.f1_mode}}}};
    Json subset_json = Json::object();
    for (const auto& [name, select] : subsets) {
        Json entry = Json::object();
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (select(rows[i])) members.push_back(i);
        }
        entry["n"] = members.size();
        Json case_ids = Json::array();
        for (auto i : members) case_ids.push_back(ids[i]);
        entry["case_ids"] = case_ids;
        for (const auto& [metric, get] : metrics) {
            std::vector<double> xs;
            for (auto i : members) xs.push_back(get(rows[i].scores));
            entry[metric] = mean_std(xs);
            if (args.baseline_pred && !members.empty()) {
                std::vector<double> base;
                for (auto i : members) base.push_back(get(*rows[i].baseline));
                Json cmp = to_json(wilcoxon_signed_rank(xs, base));
                cmp["baseline"] = mean_std(base);
                cmp["significant_at_0.05"] = cmp["p_value"].get<double>() < 0.05;
                entry["vs_baseline"][metric] = cmp;
            }
        }
        subset_json[name] = entry;
    }
    aggregate["subsets"] = subset_json;
    if (!args.ct) aggregate["note"] = "difficulty subsets need --ct";
    write_json(args.out_dir / "aggregate.json", aggregate, manifest);

    manifest.set_parameters({{"pred", args.pred.string()},
                             {"gt", args.gt.string()},
                             {"ct", args.ct ? Json(args.ct->string()) : Json(nullptr)},
                             {"baseline_pred", args.baseline_pred ? Json(args.baseline_pred->string()) : Json(nullptr)},
                             {"lesion_matching", aggregate["lesion_matching"]},
                             {"thresholds",
                              {{"min_tissue_difference", args.min_tissue_difference},
                               {"ce_low", args.ce_low},
                               {"ce_high", args.ce_high}}}});
    manifest.write(manifest_path(common, args.out_dir / "manifest.json"));
    const Json& all = subset_json["all"];
    out << "evaluate: " << ids.size() << " case(s), mean tumor DSC " << all["dice_tumor"]["mean"].dump()
        << ", mean lesion F1 " << all["lesion_f1"]["mean"].dump() << "\n";
    return 0;
}

// ---- classify -------------------------------------------------------------------

int run_classify(const ClassifyArgs& args, const Common& common, std::ostream& out) {
    RunManifest manifest("classify");
    const DifficultyThresholds thresholds{args.min_tissue_difference, args.ce_low, args.ce_high};
    const auto cases = paired_cases(args.data);
    std::vector<DifficultyFlags> flags(cases.size());
    parallel_indices(cases.size(), common.jobs, [&](std::size_t i) {
        flags[i] = classify_difficulty(read_volume(cases[i].volume), read_mask(cases[i].mask), thresholds);
    });

    std::optional<std::vector<bool>> percentile_flags;
    if (args.percentile) {
        std::vector<CaseMedian> medians;
        for (std::size_t i = 0; i < cases.size(); ++i) medians.push_back({cases[i].id, flags[i].median_liver_hu});
        percentile_flags = flag_ce_timing_percentile(medians, *args.percentile);
    }

    Json list = Json::array();
    std::string csv = "case_id,median_liver_hu,poor_ce_timing,mean_tissue_difference,low_hu_contrast";
    csv += args.percentile ? ",poor_ce_timing_percentile\n" : "\n";
    for (std::size_t i = 0; i < cases.size(); ++i) {
        manifest.add_ctv_input(cases[i].volume);
        manifest.add_ctv_input(cases[i].mask);
        Json j = to_json(flags[i]);
        j["case_id"] = cases[i].id;
        if (percentile_flags) j["poor_ce_timing_percentile"] = static_cast<bool>((*percentile_flags)[i]);
        list.push_back(j);
        csv += cases[i].id + ',' + csv_number(flags[i].median_liver_hu) + ',' + (flags[i].poor_ce_timing ? "1" : "0") +
               ',' + (flags[i].has_tumor ? csv_number(flags[i].mean_tissue_difference) : "") + ',' +
               (flags[i].low_hu_contrast ? "1" : "0");
        if (percentile_flags) csv += (*percentile_flags)[i] ? ",1" : ",0";
        csv += '\n';
    }
    const Json thresholds_json = {{"min_tissue_difference", args.min_tissue_difference},
                                  {"ce_low", args.ce_low},
                                  {"ce_high", args.ce_high},
                                  {"percentile", args.percentile ? Json(*args.percentile) : Json(nullptr)}};
    write_json(args.out, {{"thresholds", thresholds_json}, {"cases", list}}, manifest);
    if (args.csv) write_text(*args.csv, csv, manifest);
    manifest.set_parameters({{"thresholds", thresholds_json}, {"data", args.data.string()}});
    manifest.write(manifest_path(common, sibling_manifest(args.out)));
    const auto n_low = std::count_if(flags.begin(), flags.end(), [](const auto& f) { return f.low_hu_contrast; });
    const auto n_ce = std::count_if(flags.begin(), flags.end(), [](const auto& f) { return f.poor_ce_timing; });
    out << "classify: " << cases.size() << " case(s), " << n_low << " low HU contrast, " << n_ce
        << " poor CE timing\n";
    return 0;
}

// ---- artifact-check -------------------------------------------------------------

int run_artifact_check(const ArtifactArgs& args, const Common& common, std::ostream& out) {
    RunManifest manifest("artifact-check");
    Json report;
    if (args.before || args.after) {
        if (!args.before || !args.after) throw ValidationError("pair mode needs both --before and --after");
        if (args.in) throw ValidationError("use either --before/--after or --in with --method");
        const Volume before = read_volume(*args.before);
        const Volume after = read_volume(*args.after);
        manifest.add_ctv_input(*args.before);
        manifest.add_ctv_input(*args.after);
        report = {{"mode", "pair"}, {"report", to_json(detect_artifact(before, after, args.tolerance))}};
    } else {
        if (!args.in || args.method.empty()) {
            throw ValidationError("give --before and --after, or --in with --method");
        }
        if (args.spec.file) manifest.add_input(*args.spec.file);
        if (args.pipeline) manifest.add_input(*args.pipeline);
        Json effective;
        const AugmentationSpec spec = parse_aug_spec(args.spec, &effective);
        const Method method = resolve_method(args.method, spec, args.pipeline, args.range, args.probability);
        manifest.set_spec("augmentation", effective);
        manifest.set_seed(spec.seed);
        const Volume raw = read_volume(*args.in);
        manifest.add_ctv_input(*args.in);
        if (raw.units() != Units::HU) throw PreconditionError("simulation mode expects an HU volume");

        fs::path stem = ctv_header_path(*args.in);
        stem.replace_extension();
        const std::string case_id = stem.filename().string();
        const Volume base = base_windowing(raw, spec);
        const Normalization norm = spec.resolved_normalization();

        Json draws = Json::array();
        std::size_t fired = 0;
        std::size_t lower = 0;
        std::size_t upper = 0;
        for (std::size_t k = 0; k < args.draws; ++k) {
            RandomStream rng = case_stream(spec.seed, case_id, k);
            const MethodOutput result = apply_method(raw, method, spec, rng);
            // Window methods are checked against the clip that produced them;
            // pipelines against the base-window clip they were applied to.
            const ArtifactReport r =
                result.window ? detect_window_artifact(raw, result.out, result.window->window, norm, args.tolerance)
                              : detect_artifact(base, result.out, args.tolerance);
            fired += r.any();
            lower += r.lower_artifact;
            upper += r.upper_artifact;
            Json d = to_json(r);
            d["draw"] = k;
            if (result.window) d["window"] = to_json(*result.window);
            draws.push_back(d);
        }
        report = {{"mode", "simulate"},
                  {"method", method.describe()},
                  {"draws", args.draws},
                  {"draws_with_artifact", fired},
                  {"draws_with_lower_artifact", lower},
                  {"draws_with_upper_artifact", upper},
                  {"per_draw", draws}};
    }
    write_json(args.out, report, manifest);
    manifest.set_parameters({{"tolerance", args.tolerance}, {"draws", args.draws}});
    manifest.write(manifest_path(common, sibling_manifest(args.out)));
    if (report["mode"] == "pair") {
        out << "artifact: " << (report["report"]["artifact"].get<bool>() ? "yes" : "no") << "\n";
    } else {
        out << "artifact: " << report["draws_with_artifact"].get<std::size_t>() << " of " << args.draws
            << " draw(s)\n";
    }
    return 0;
}

// ---- histogram ------------------------------------------------------------------

int run_histogram(const HistogramArgs& args, const Common& common, std::ostream& out) {
    RunManifest manifest("histogram");
    if (args.range.size() != 2) throw ValidationError("--range needs LO HI");
    if (args.stage != "raw" && args.stage != "base") throw ValidationError("--stage must be raw or base");
    if (args.spec.file) manifest.add_input(*args.spec.file);
    if (args.pipeline) manifest.add_input(*args.pipeline);
    Json effective;
    const AugmentationSpec spec = parse_aug_spec(args.spec, &effective);
    manifest.set_spec("augmentation", effective);
    manifest.set_seed(spec.seed);

    const Volume raw = read_volume(args.in);
    manifest.add_ctv_input(args.in);
    const Volume before = args.stage == "raw" ? raw : base_windowing(raw, spec);
    const Histogram h_before = histogram(before, args.bins, args.range[0], args.range[1]);
    write_text(args.out_dir / "before.csv", to_csv(h_before), manifest);

    Json report = {{"stage", args.stage}, {"before", to_json(h_before)}};
    if (!args.method.empty()) {
        const Method method = resolve_method(args.method, spec, args.pipeline, args.transform_range, args.probability);
        fs::path stem = ctv_header_path(args.in);
        stem.replace_extension();
        RandomStream rng = case_stream(spec.seed, stem.filename().string(), 0);
        const MethodOutput result = apply_method(raw, method, spec, rng);
        const Histogram h_after = histogram(result.out, args.bins, args.range[0], args.range[1]);
        write_text(args.out_dir / "after.csv", to_csv(h_after), manifest);
        report["method"] = method.describe();
        if (result.window) report["window"] = to_json(*result.window);
        report["after"] = to_json(h_after);
        report["shape_distance"] = shape_distance(h_before, h_after);
    }
    write_json(args.out_dir / "histograms.json", report, manifest);
    manifest.set_parameters({{"bins", args.bins}, {"range", args.range}, {"stage", args.stage}});
    manifest.write(manifest_path(common, args.out_dir / "manifest.json"));
    out << "histogram: " << args.bins << " bins";
    if (report.contains("shape_distance")) out << ", shape distance " << report["shape_distance"].get<double>();
    out << "\n";
    return 0;
}

}  // namespace ctaug::cli
