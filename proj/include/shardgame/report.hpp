#pragma once

// CSV rows, run manifests and atomic file output.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shardgame/game.hpp"
#include "shardgame/sim.hpp"

namespace shardgame {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Output file could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<std::string_view, 10> kCsvColumns{
    "sweep_variable",     "sweep_value",      "scheme",     "mean_coop_ratio", "mean_defect_ratio",
    "mean_util_coop",     "mean_util_defect", "weighted_mean_util", "block_commit_rate", "iterations"};

struct CsvRow {
  std::string sweep_variable;
  double sweep_value = 0.0;
  std::string scheme;
  double mean_coop_ratio = 0.0;
  double mean_defect_ratio = 0.0;
  double mean_util_coop = 0.0;
  double mean_util_defect = 0.0;
  double weighted_mean_util = 0.0;
  double block_commit_rate = 0.0;
  std::size_t iterations = 0;

  bool operator==(const CsvRow&) const = default;
};

/// Failed sweep points are left out; they carry no meaningful numbers.
std::vector<CsvRow> to_rows(SweepVariable variable, Scheme scheme, const std::vector<AggregateResult>& results);

std::string format_csv(const std::vector<CsvRow>& rows);

/// Inverse of format_csv. Throws std::runtime_error on a malformed table.
std::vector<CsvRow> parse_csv(std::string_view text);

struct RunManifest {
  std::string tool_version{kToolVersion};
  std::uint64_t seed = 0;
  std::string digest_algorithm;
  std::string started_at;
  std::string finished_at;
  /// Canonical configuration text; feeding it back reproduces the CSVs.
  std::string config_text;
  std::vector<std::string> outputs;
  std::vector<std::string> failed_points;
};

std::string manifest_to_json(const RunManifest& manifest);
/// Throws std::runtime_error when required fields are missing.
RunManifest manifest_from_json(std::string_view text);

/// UTC, second resolution, e.g. 2024-05-01T12:00:00Z.
std::string iso8601_now();

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace shardgame
