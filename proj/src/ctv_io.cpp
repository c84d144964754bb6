#include "ctaug/ctv_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ctaug/error.hpp"

namespace ctaug {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(CtvDtype dtype) {
    switch (dtype) {
        case CtvDtype::I16: return "i16";
        case CtvDtype::F32: return "f32";
        case CtvDtype::U8: return "u8";
    }
    return "f32";
}

CtvDtype ctv_dtype_from_string(std::string_view name) {
    if (name == "i16") return CtvDtype::I16;
    if (name == "f32") return CtvDtype::F32;
    if (name == "u8") return CtvDtype::U8;
    throw ValidationError("unknown CTV dtype '" + std::string(name) + "'");
}

namespace {

fs::path stem_of(const fs::path& path) {
    fs::path p = path;
    if (p.extension() == ".json" || p.extension() == ".raw") p.replace_extension();
    return p;
}

std::size_t dtype_size(CtvDtype dtype) {
    switch (dtype) {
        case CtvDtype::I16: return 2;
        case CtvDtype::F32: return 4;
        case CtvDtype::U8: return 1;
    }
    return 1;
}

template <class T>
void put_le(std::string& out, T value) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>(bits & 0xFFu));
        bits = static_cast<U>(bits >> 8);
    }
}

template <class T>
T get_le(const char* p) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
    U bits = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
        bits = static_cast<U>((bits << 8) | static_cast<unsigned char>(p[i]));
    }
    return std::bit_cast<T>(bits);
}

json geometry_header(const Shape& shape, const Spacing& spacing, CtvDtype dtype, const fs::path& data) {
    return json{{"schema", kCtvSchema},
                {"shape", {shape.z, shape.y, shape.x}},
                {"spacing_mm", {spacing.z, spacing.y, spacing.x}},
                {"dtype", to_string(dtype)},
                {"byte_order", "le"},
                {"data_file", data.filename().string()}};
}

struct Header {
    Shape shape;
    Spacing spacing;
    CtvDtype dtype;
    json doc;
};

Header parse_header(const fs::path& header_path) {
    json doc;
    try {
        doc = json::parse(read_file(header_path));
    } catch (const json::parse_error& e) {
        throw ValidationError(header_path.string() + ": " + e.what());
    }
    try {
        if (doc.at("schema").get<std::string>() != kCtvSchema) {
            throw ValidationError(header_path.string() + ": unsupported schema");
        }
        if (doc.at("byte_order").get<std::string>() != "le") {
            throw ValidationError(header_path.string() + ": only little-endian data is supported");
        }
        const auto shape = doc.at("shape").get<std::vector<std::int64_t>>();
        const auto spacing = doc.at("spacing_mm").get<std::vector<double>>();
        if (shape.size() != 3 || spacing.size() != 3) {
            throw ValidationError(header_path.string() + ": shape and spacing_mm need three entries");
        }
        for (auto n : shape) {
            if (n <= 0) throw ValidationError(header_path.string() + ": shape entries must be positive");
        }
        Header h{{static_cast<std::size_t>(shape[0]), static_cast<std::size_t>(shape[1]),
                  static_cast<std::size_t>(shape[2])},
                 {spacing[0], spacing[1], spacing[2]},
                 ctv_dtype_from_string(doc.at("dtype").get<std::string>()),
                 doc};
        return h;
    } catch (const json::exception& e) {
        throw ValidationError(header_path.string() + ": " + e.what());
    }
}

std::string read_payload(const fs::path& path, const Header& h) {
    fs::path data = ctv_data_path(path);
    if (h.doc.contains("data_file")) data = ctv_header_path(path).parent_path() / h.doc["data_file"].get<std::string>();
    std::string bytes = read_file(data);
    const std::size_t expected = h.shape.count() * dtype_size(h.dtype);
    if (bytes.size() != expected) {
        throw IoError(data.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                      std::to_string(bytes.size()));
    }
    return bytes;
}

}  // namespace

fs::path ctv_header_path(const fs::path& path) {
    fs::path p = stem_of(path);
    p += ".json";
    return p;
}

fs::path ctv_data_path(const fs::path& path) {
    fs::path p = stem_of(path);
    p += ".raw";
    return p;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return buffer.str();
}

void write_volume(const fs::path& path, const Volume& v, CtvDtype dtype) {
    if (dtype == CtvDtype::U8) throw PreconditionError("volumes are stored as i16 or f32");
    std::string payload;
    payload.reserve(v.size() * dtype_size(dtype));
    if (dtype == CtvDtype::I16) {
        for (float f : v.voxels()) {
            if (f != std::nearbyint(f) || f < std::numeric_limits<std::int16_t>::min() ||
                f > std::numeric_limits<std::int16_t>::max()) {
                throw PreconditionError("voxel value " + std::to_string(f) + " is not representable as i16");
            }
            put_le(payload, static_cast<std::int16_t>(f));
        }
    } else {
        for (float f : v.voxels()) put_le(payload, f);
    }
    const fs::path data = ctv_data_path(path);
    json header = geometry_header(v.shape(), v.spacing(), dtype, data);
    header["units"] = to_string(v.units());
    write_file_atomic(data, payload);
    write_file_atomic(ctv_header_path(path), header.dump(2) + "\n");
}

Volume read_volume(const fs::path& path) {
    const Header h = parse_header(ctv_header_path(path));
    if (h.dtype == CtvDtype::U8) throw ValidationError(path.string() + ": u8 data is a mask, not a volume");
    Units units = Units::HU;
    try {
        units = units_from_string(h.doc.at("units").get<std::string>());
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    const std::string bytes = read_payload(path, h);
    std::vector<float> voxels(h.shape.count());
    if (h.dtype == CtvDtype::I16) {
        for (std::size_t i = 0; i < voxels.size(); ++i) voxels[i] = get_le<std::int16_t>(bytes.data() + 2 * i);
    } else {
        for (std::size_t i = 0; i < voxels.size(); ++i) voxels[i] = get_le<float>(bytes.data() + 4 * i);
    }
    return Volume(h.shape, h.spacing, std::move(voxels), units);
}

void write_mask(const fs::path& path, const Mask& m) {
    const fs::path data = ctv_data_path(path);
    json header = geometry_header(m.shape(), m.spacing(), CtvDtype::U8, data);
    json labels = json::object();
    for (const auto& [value, name] : m.label_set()) labels[std::to_string(value)] = name;
    header["labels"] = labels;
    const auto values = m.labels();
    write_file_atomic(data, std::string_view(reinterpret_cast<const char*>(values.data()), values.size()));
    write_file_atomic(ctv_header_path(path), header.dump(2) + "\n");
}

Mask read_mask(const fs::path& path) {
    const Header h = parse_header(ctv_header_path(path));
    if (h.dtype != CtvDtype::U8) throw ValidationError(path.string() + ": masks must use dtype u8");
    LabelSet label_set;
    try {
        for (const auto& [key, name] : h.doc.at("labels").items()) {
            const int value = std::stoi(key);
            if (value < 0 || value > 255) throw ValidationError(path.string() + ": label out of u8 range");
            label_set[static_cast<std::uint8_t>(value)] = name.get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    } catch (const std::invalid_argument&) {
        throw ValidationError(path.string() + ": label keys must be integers");
    }
    const std::string bytes = read_payload(path, h);
    std::vector<std::uint8_t> labels(bytes.begin(), bytes.end());
    return Mask(h.shape, h.spacing, std::move(labels), std::move(label_set));
}

}  // namespace ctaug
