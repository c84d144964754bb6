#include "manifest.hpp"

#include <ctime>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "ctaug/ctv_io.hpp"
#include "ctaug/error.hpp"
#include "ctaug/rng.hpp"

#ifndef CTAUG_VERSION
#define CTAUG_VERSION "0.0.0"
#endif

namespace ctaug::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

std::string sha256_file(const fs::path& path) {
    return sha256_hex(read_file(path));
}

namespace {

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

}  // namespace

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), started_(std::chrono::steady_clock::now()), started_utc_(utc_now()) {}

void RunManifest::add_input(const fs::path& path) {
    inputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::add_ctv_input(const fs::path& stem) {
    add_input(ctv_header_path(stem));
    add_input(ctv_data_path(stem));
}

void RunManifest::add_output(const fs::path& path) {
    outputs_.push_back(path.string());
}

void RunManifest::add_ctv_output(const fs::path& stem) {
    add_output(ctv_header_path(stem));
    add_output(ctv_data_path(stem));
}

void RunManifest::set_spec(const std::string& name, Json spec) {
    const std::string canonical = spec.dump();
    specs_[name] = {{"effective", std::move(spec)}, {"sha256", sha256_hex(canonical)}};
}

Json RunManifest::to_json() const {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    Json j = {{"tool", "ctaug"},
              {"tool_version", CTAUG_VERSION},
              {"command", command_},
              {"generator", kGeneratorName},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"specs", specs_},
              {"parameters", parameters_},
              {"timing", {{"started_utc", started_utc_}, {"wall_seconds", elapsed}}}};
    j["seed"] = seed_ ? Json(*seed_) : Json(nullptr);
    return j;
}

void RunManifest::write(const fs::path& path) const {
    write_file_atomic(path, to_json().dump(2) + "\n");
}

}  // namespace ctaug::cli
