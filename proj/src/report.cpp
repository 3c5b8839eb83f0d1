#include "shardgame/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <system_error>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include "json.hpp"

namespace shardgame {

namespace {

std::string num(double v) { return fmt::format("{}", v); }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double field_double(std::string_view text, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::runtime_error(fmt::format("csv line {}: bad number '{}'", line, text));
  }
  return v;
}

}  // namespace

std::vector<CsvRow> to_rows(SweepVariable variable, Scheme scheme, const std::vector<AggregateResult>& results) {
  std::vector<CsvRow> rows;
  for (const auto& r : results) {
    if (r.failed) continue;
    rows.push_back({std::string(to_string(variable)), r.sweep_point, std::string(to_string(scheme)),
                    r.mean_cooperation_ratio, r.mean_defection_ratio, r.mean_utility_cooperators,
                    r.mean_utility_defectors, r.weighted_mean_utility, r.block_commit_rate, r.iterations});
  }
  return rows;
}

std::string format_csv(const std::vector<CsvRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i > 0) out += ',';
    out += kCsvColumns[i];
  }
  out += '\n';
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.sweep_variable, num(r.sweep_value), r.scheme,
                       num(r.mean_coop_ratio), num(r.mean_defect_ratio), num(r.mean_util_coop),
                       num(r.mean_util_defect), num(r.weighted_mean_util), num(r.block_commit_rate), r.iterations);
  }
  return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header = true;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != kCsvColumns.size()) {
      throw std::runtime_error(fmt::format("csv line {}: expected {} fields, got {}", line_no, kCsvColumns.size(),
                                           fields.size()));
    }
    if (header) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] != kCsvColumns[i]) {
          throw std::runtime_error(fmt::format("csv header: column {} should be '{}'", i + 1, kCsvColumns[i]));
        }
      }
      header = false;
      continue;
    }
    CsvRow r;
    r.sweep_variable = std::string(fields[0]);
    r.sweep_value = field_double(fields[1], line_no);
    r.scheme = std::string(fields[2]);
    r.mean_coop_ratio = field_double(fields[3], line_no);
    r.mean_defect_ratio = field_double(fields[4], line_no);
    r.mean_util_coop = field_double(fields[5], line_no);
    r.mean_util_defect = field_double(fields[6], line_no);
    r.weighted_mean_util = field_double(fields[7], line_no);
    r.block_commit_rate = field_double(fields[8], line_no);
    r.iterations = static_cast<std::size_t>(field_double(fields[9], line_no));
    rows.push_back(std::move(r));
  }
  if (header) throw std::runtime_error("csv: missing header row");
  return rows;
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["digest_algorithm"] = m.digest_algorithm;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["config"] = m.config_text;
  j["outputs"] = m.outputs;
  j["failed_points"] = m.failed_points;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw std::runtime_error(fmt::format("manifest is not valid JSON: {}", ex.what()));
  }
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.digest_algorithm = j.at("digest_algorithm").get<std::string>();
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    m.config_text = j.at("config").get<std::string>();
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.failed_points = j.value("failed_points", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& ex) {
    throw std::runtime_error(fmt::format("manifest is incomplete: {}", ex.what()));
  }
  return m;
}

std::string iso8601_now() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", std::chrono::sys_seconds(now));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError(fmt::format("write to {} failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(fmt::format("cannot move output into place at {}", path.string()));
  }
}

}  // namespace shardgame
