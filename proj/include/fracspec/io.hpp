#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracspec/forward_solver.hpp"
#include "fracspec/recovery.hpp"

namespace fracspec {

inline constexpr int kSchemaVersion = 1;

/// Binary record file:
///   8 bytes  magic "FSPECREC"
///   u32      schema version
///   u64      header length L
///   L bytes  UTF-8 JSON header (grid, hashes, alpha, beta, shape, units)
///   payload  rows x cols little-endian float64, row-major (time x V-grid)
void write_record(const std::filesystem::path& path, const MeasurementRecord& rec, const std::string& config_hash);
/// Throws ProvenanceError on a malformed or truncated file.
MeasurementRecord read_record(const std::filesystem::path& path, std::string* config_hash = nullptr);

nlohmann::json spectral_to_json(const SpectralData& d);
SpectralData spectral_from_json(const nlohmann::json& j);
void write_spectral(const std::filesystem::path& path, const SpectralData& d, const std::string& config_hash);
SpectralData read_spectral(const std::filesystem::path& path, std::string* config_hash = nullptr);

/// Plain CSV with a header row; numbers use 17 significant digits.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
};
std::string csv_number(double v);
void write_csv(const std::filesystem::path& path, const CsvTable& t);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace fracspec
