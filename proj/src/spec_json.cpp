#include "ctaug/spec_json.hpp"

#include <initializer_list>
#include <string>

#include "ctaug/ctv_io.hpp"
#include "ctaug/error.hpp"

namespace ctaug {

namespace {

void require_object(const Json& j, const char* what) {
    if (!j.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw ValidationError(std::string(what) + ": unknown field '" + key + "'");
    }
}

template <class T>
void read(const Json& j, const char* key, T& out, const char* what) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ValidationError(std::string(what) + ": field '" + key + "' has the wrong type");
    }
}

std::pair<double, double> read_range(const Json& j, const char* key, std::pair<double, double> fallback,
                                     const char* what) {
    if (!j.contains(key)) return fallback;
    std::vector<double> r;
    read(j, key, r, what);
    if (r.size() != 2) throw ValidationError(std::string(what) + ": '" + key + "' needs exactly two numbers");
    return {r[0], r[1]};
}

template <class T>
std::array<double, 3> triple(const T& a, const T& b, const T& c) {
    return {static_cast<double>(a), static_cast<double>(b), static_cast<double>(c)};
}

Json ellipsoid_json(const Ellipsoid& e) {
    return {{"center", e.center}, {"radii", e.radii}};
}

Ellipsoid ellipsoid_from_json(const Json& j, const char* what) {
    require_object(j, what);
    check_keys(j, {"center", "radii"}, what);
    Ellipsoid e;
    read(j, "center", e.center, what);
    read(j, "radii", e.radii, what);
    return e;
}

}  // namespace

Json load_json_file(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

AugmentationSpec augmentation_spec_from_json(const Json& j) {
    constexpr const char* what = "augmentation spec";
    require_object(j, what);
    check_keys(j, {"base", "level_range", "width_range", "p_level", "p_width", "normalization", "seed"}, what);
    AugmentationSpec spec;
    if (j.contains("base")) {
        const Json& b = j.at("base");
        require_object(b, "base");
        check_keys(b, {"width", "level"}, "base");
        double width = spec.base.width();
        double level = spec.base.level();
        read(b, "width", width, "base");
        read(b, "level", level, "base");
        spec.base = ViewingWindow(width, level);
    }
    std::tie(spec.level_min, spec.level_max) =
        read_range(j, "level_range", {spec.level_min, spec.level_max}, what);
    std::tie(spec.width_min, spec.width_max) =
        read_range(j, "width_range", {spec.width_min, spec.width_max}, what);
    read(j, "p_level", spec.p_level, what);
    read(j, "p_width", spec.p_width, what);
    read(j, "seed", spec.seed, what);
    if (j.contains("normalization")) {
        const Json& n = j.at("normalization");
        if (n.is_string()) {
            spec.normalization = normalization_mode_from_string(n.get<std::string>());
        } else {
            require_object(n, "normalization");
            check_keys(n, {"mode", "mean", "std"}, "normalization");
            std::string mode(to_string(spec.normalization));
            read(n, "mode", mode, "normalization");
            spec.normalization = normalization_mode_from_string(mode);
            read(n, "mean", spec.zscore.mean, "normalization");
            read(n, "std", spec.zscore.std, "normalization");
        }
    }
    spec.validate();
    return spec;
}

Json to_json(const AugmentationSpec& spec) {
    Json norm = {{"mode", to_string(spec.normalization)}};
    if (spec.normalization == NormalizationMode::ZScoreGlobal) {
        norm["mean"] = spec.zscore.mean;
        norm["std"] = spec.zscore.std;
    }
    return {{"base", to_json(spec.base)},
            {"level_range", {spec.level_min, spec.level_max}},
            {"width_range", {spec.width_min, spec.width_max}},
            {"p_level", spec.p_level},
            {"p_width", spec.p_width},
            {"normalization", norm},
            {"seed", spec.seed}};
}

IntensityTransform transform_from_json(const Json& j) {
    constexpr const char* what = "transform";
    require_object(j, what);
    check_keys(j, {"kind", "range", "probability", "anchor", "anchor_value", "preserve_range"}, what);
    IntensityTransform t;
    if (!j.contains("kind")) throw ValidationError("transform: missing 'kind'");
    std::string kind;
    read(j, "kind", kind, what);
    t.kind = transform_kind_from_string(kind);
    std::tie(t.lo, t.hi) = read_range(j, "range", {t.lo, t.hi}, what);
    read(j, "probability", t.probability, what);
    read(j, "preserve_range", t.preserve_range, what);
    std::string anchor = "image_mean";
    read(j, "anchor", anchor, what);
    if (anchor == "image_mean") {
        t.anchor = ImageMeanAnchor{};
    } else if (anchor == "window_center") {
        WindowCenterAnchor c;
        read(j, "anchor_value", c.value, what);
        t.anchor = c;
    } else {
        throw ValidationError("transform: anchor must be 'image_mean' or 'window_center'");
    }
    t.validate();
    return t;
}

Json to_json(const IntensityTransform& t) {
    Json j = {{"kind", to_string(t.kind)},
              {"range", {t.lo, t.hi}},
              {"probability", t.probability},
              {"preserve_range", t.preserve_range}};
    if (const auto* c = std::get_if<WindowCenterAnchor>(&t.anchor)) {
        j["anchor"] = "window_center";
        j["anchor_value"] = c->value;
    } else {
        j["anchor"] = "image_mean";
    }
    return j;
}

Pipeline pipeline_from_json(const Json& j) {
    constexpr const char* what = "pipeline";
    require_object(j, what);
    check_keys(j, {"transforms", "seed", "identity"}, what);
    Pipeline p;
    if (j.contains("transforms")) {
        if (!j.at("transforms").is_array()) throw ValidationError("pipeline: 'transforms' must be an array");
        for (const auto& t : j.at("transforms")) p.transforms.push_back(transform_from_json(t));
    }
    read(j, "seed", p.seed, what);
    read(j, "identity", p.identity, what);
    p.validate();
    return p;
}

Json to_json(const Pipeline& p) {
    Json transforms = Json::array();
    for (const auto& t : p.transforms) transforms.push_back(to_json(t));
    return {{"transforms", transforms}, {"seed", p.seed}, {"identity", p.identity}};
}

PhantomSpec phantom_spec_from_json(const Json& j) {
    constexpr const char* what = "phantom spec";
    require_object(j, what);
    check_keys(j,
               {"shape", "spacing_mm", "body_hu", "liver_hu", "tumor_offsets", "bone_hu", "air_hu", "ce_offset",
                "noise_sigma", "seed", "body", "bone_ring", "liver", "tumors"},
               what);
    PhantomSpec spec;
    if (j.contains("shape")) {
        std::vector<std::int64_t> s;
        read(j, "shape", s, what);
        if (s.size() != 3 || s[0] <= 0 || s[1] <= 0 || s[2] <= 0) {
            throw ValidationError("phantom spec: shape needs three positive integers");
        }
        spec.shape = {static_cast<std::size_t>(s[0]), static_cast<std::size_t>(s[1]), static_cast<std::size_t>(s[2])};
    }
    if (j.contains("spacing_mm")) {
        std::array<double, 3> s{};
        read(j, "spacing_mm", s, what);
        spec.spacing = {s[0], s[1], s[2]};
    }
    read(j, "body_hu", spec.body_hu, what);
    read(j, "liver_hu", spec.liver_hu, what);
    read(j, "tumor_offsets", spec.tumor_offsets, what);
    read(j, "bone_hu", spec.bone_hu, what);
    read(j, "air_hu", spec.air_hu, what);
    read(j, "ce_offset", spec.ce_offset, what);
    read(j, "noise_sigma", spec.noise_sigma, what);
    read(j, "seed", spec.seed, what);
    if (j.contains("body")) spec.body = ellipsoid_from_json(j.at("body"), "body");
    if (j.contains("liver")) spec.liver = ellipsoid_from_json(j.at("liver"), "liver");
    if (j.contains("bone_ring")) {
        const auto r = read_range(j, "bone_ring", {spec.bone_inner, spec.bone_outer}, what);
        spec.bone_inner = r.first;
        spec.bone_outer = r.second;
    }
    if (j.contains("tumors")) {
        if (!j.at("tumors").is_array()) throw ValidationError("phantom spec: 'tumors' must be an array");
        for (const auto& t : j.at("tumors")) {
            require_object(t, "tumor");
            check_keys(t, {"center", "radius_mm"}, "tumor");
            TumorSphere s;
            read(t, "center", s.center, "tumor");
            read(t, "radius_mm", s.radius_mm, "tumor");
            spec.tumors.push_back(s);
        }
    }
    spec.validate();
    return spec;
}

Json to_json(const PhantomSpec& spec) {
    Json tumors = Json::array();
    for (const auto& t : spec.tumors) tumors.push_back({{"center", t.center}, {"radius_mm", t.radius_mm}});
    return {{"shape", {spec.shape.z, spec.shape.y, spec.shape.x}},
            {"spacing_mm", triple(spec.spacing.z, spec.spacing.y, spec.spacing.x)},
            {"body_hu", spec.body_hu},
            {"liver_hu", spec.liver_hu},
            {"tumor_offsets", spec.tumor_offsets},
            {"bone_hu", spec.bone_hu},
            {"air_hu", spec.air_hu},
            {"ce_offset", spec.ce_offset},
            {"noise_sigma", spec.noise_sigma},
            {"seed", spec.seed},
            {"body", ellipsoid_json(spec.body)},
            {"bone_ring", {spec.bone_inner, spec.bone_outer}},
            {"liver", ellipsoid_json(spec.liver)},
            {"tumors", tumors}};
}

Json to_json(const ViewingWindow& w) {
    return {{"width", w.width()}, {"level", w.level()}};
}

Json to_json(const SampledWindow& s) {
    return {{"width", s.window.width()},
            {"level", s.window.level()},
            {"level_was_shifted", s.level_was_shifted},
            {"width_was_scaled", s.width_was_scaled},
            {"draws_consumed", s.draws_consumed}};
}

Json to_json(const ArtifactReport& r) {
    return {{"lower_artifact", r.lower_artifact},
            {"upper_artifact", r.upper_artifact},
            {"artifact", r.any()},
            {"displaced_lower", r.displaced_lower},
            {"displaced_upper", r.displaced_upper},
            {"fraction_boundary_voxels_moved", r.fraction_boundary_voxels_moved}};
}

Json to_json(const DifficultyFlags& f) {
    Json j = {{"poor_ce_timing", f.poor_ce_timing},
              {"median_liver_hu", f.median_liver_hu},
              {"has_tumor", f.has_tumor},
              {"low_hu_contrast", f.low_hu_contrast}};
    j["mean_tissue_difference"] = f.has_tumor ? Json(f.mean_tissue_difference) : Json(nullptr);
    return j;
}

Json to_json(const CaseWindowEstimate& c) {
    return {{"case_id", c.case_id},
            {"width", c.window.width()},
            {"level", c.window.level()},
            {"lower_hu", c.lower_hu},
            {"upper_hu", c.upper_hu},
            {"coverage", c.coverage},
            {"label", c.label},
            {"voxel_count", c.voxel_count}};
}

Json to_json(const AugmentationRanges& r) {
    return {{"level_range", {r.level_min, r.level_max}}, {"width_range", {r.width_min, r.width_max}}};
}

Json to_json(const InstanceMatchResult& r) {
    return {{"true_positives", r.true_positives},
            {"false_positives", r.false_positives},
            {"false_negatives", r.false_negatives},
            {"matched_predictions", r.matched_predictions},
            {"predicted_components", r.predicted_components},
            {"gt_overlap_fractions", r.gt_overlap_fractions},
            {"pred_overlap_fractions", r.pred_overlap_fractions},
            {"f1", r.f1},
            {"recall", r.recall},
            {"precision", r.precision}};
}

Json to_json(const SignificanceResult& r) {
    return {{"statistic", r.statistic},
            {"w_plus", r.w_plus},
            {"p_value", r.p_value},
            {"n_effective", r.n_effective},
            {"method", to_string(r.method)}};
}

Json to_json(const Histogram& h) {
    return {{"bin_edges", h.bin_edges},
            {"counts", h.counts},
            {"underflow", h.underflow},
            {"overflow", h.overflow},
            {"total", h.total}};
}

}  // namespace ctaug
