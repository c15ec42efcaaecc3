#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bipedest/gait_sim.hpp"

namespace bipedest {

inline constexpr int kDatasetFormatVersion = 1;

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double x);
/// Parses the whole of `s`; throws std::invalid_argument otherwise.
double parse_double(std::string_view s);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

nlohmann::json to_json(const NoiseConfig& n);
NoiseConfig noise_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GaitConfig& g);
GaitConfig gait_from_json(const nlohmann::json& j);

/// Column names of the dataset CSV for the given number of feet.
std::vector<std::string> dataset_columns(int n_feet);

/// Sidecar metadata path for a CSV file: same stem, ".json" extension.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Writes the CSV (one row per sample) and its JSON sidecar. Returns the
/// hash of the CSV bytes. Throws std::runtime_error if a file cannot be written.
std::string write_dataset(const Dataset& d, const std::filesystem::path& csv);

/// Reads a dataset written by write_dataset. Contact events are rebuilt from
/// the contact flags. Throws std::runtime_error on schema or hash mismatch.
Dataset read_dataset(const std::filesystem::path& csv);

/// Minimal comma-separated table reader: a header row then numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a column; throws std::out_of_range when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Splits a line on commas (no quoting).
std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace bipedest
