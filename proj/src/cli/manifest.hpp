#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ctaug/spec_json.hpp"

namespace ctaug::cli {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents. Throws IoError.
std::string sha256_file(const std::filesystem::path& path);

/// Provenance record written next to every command's outputs.
class RunManifest {
public:
    explicit RunManifest(std::string command);

    /// Records a file read by the command together with its digest. CTV
    /// inputs should be added through add_ctv_input so both files are hashed.
    void add_input(const std::filesystem::path& path);
    void add_ctv_input(const std::filesystem::path& stem);
    void add_output(const std::filesystem::path& path);
    void add_ctv_output(const std::filesystem::path& stem);
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    /// Effective spec after flag overrides; its canonical dump is hashed.
    void set_spec(const std::string& name, Json spec);
    void set_parameters(Json parameters) { parameters_ = std::move(parameters); }

    [[nodiscard]] Json to_json() const;
    void write(const std::filesystem::path& path) const;

private:
    std::string command_;
    std::chrono::steady_clock::time_point started_;
    std::string started_utc_;
    Json inputs_ = Json::array();
    Json outputs_ = Json::array();
    Json specs_ = Json::object();
    Json parameters_ = Json::object();
    std::optional<std::uint64_t> seed_;
};

}  // namespace ctaug::cli
