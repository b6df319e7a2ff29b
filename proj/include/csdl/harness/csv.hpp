#pragma once

// Versioned CSV persistence (csdl_csv_v1) for per-trial and summary tables.
//
// Every file starts with a metadata comment line
//   # csdl_csv_v1 table=<trials|summary> key=value ...
// followed by the column header. Floats use 12 significant digits, '.' as
// the decimal separator and '\n' line endings. An empty cell means "not
// applicable" (e.g. mse_identity under heavy-tailed noise).

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <fmt/format.h>

#include "csdl/bounds.hpp"
#include "csdl/errors.hpp"

namespace csdl::harness {

inline constexpr std::string_view kCsvVersion = "csdl_csv_v1";

inline constexpr std::array<std::string_view, 19> kTrialColumns = {
    "experiment", "grid_index",      "N",        "n",
    "K",          "sparsity",        "lambda",   "noise_kind",
    "trial",      "seed",            "mse_csdl", "mse_zero",
    "mse_identity", "final_objective", "ub_componentwise", "ub_joint",
    "lb_componentwise", "lb_joint",  "wall_time_s"};

/// Risk columns aggregated by the summary table, in output order.
inline constexpr std::array<std::string_view, 4> kMetricColumns = {"mse_csdl", "mse_zero", "mse_identity",
                                                                   "final_objective"};

struct TrialRecord {
  std::string experiment;
  std::int64_t grid_index = 0;
  std::int64_t length = 0;       // N
  std::int64_t atom_length = 0;  // n
  std::int64_t atoms = 0;        // K
  std::int64_t sparsity = 0;
  double lambda = 0.0;
  std::string noise_kind;
  std::int64_t trial = 0;
  std::uint64_t seed = 0;
  std::optional<double> mse_csdl;
  std::optional<double> mse_zero;
  std::optional<double> mse_identity;
  std::optional<double> final_objective;
  std::optional<BoundSet> bounds;
  std::optional<double> wall_time_s;
  /// Set on failure rows; never written to disk.
  std::string error;

  bool failed() const { return !mse_csdl.has_value(); }
};

/// Ordered key=value pairs carried on the metadata line.
using Metadata = std::vector<std::pair<std::string, std::string>>;

inline std::string format_real(double v) { return fmt::format("{:.12g}", v); }

inline std::string format_cell(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

inline std::string metadata_line(std::string_view table, const Metadata& meta) {
  std::string line = fmt::format("# {} table={}", kCsvVersion, table);
  for (const auto& [key, value] : meta) line += fmt::format(" {}={}", key, value);
  return line;
}

inline std::string join(const auto& cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  return out;
}

inline std::string trial_row(const TrialRecord& r) {
  std::vector<std::string> cells = {
      r.experiment,
      std::to_string(r.grid_index),
      std::to_string(r.length),
      std::to_string(r.atom_length),
      std::to_string(r.atoms),
      std::to_string(r.sparsity),
      format_real(r.lambda),
      r.noise_kind,
      std::to_string(r.trial),
      std::to_string(r.seed),
      format_cell(r.mse_csdl),
      format_cell(r.mse_zero),
      format_cell(r.mse_identity),
      format_cell(r.final_objective),
      r.bounds ? format_real(r.bounds->ub_componentwise) : "",
      r.bounds ? format_real(r.bounds->ub_joint) : "",
      r.bounds ? format_real(r.bounds->lb_componentwise) : "",
      r.bounds ? format_real(r.bounds->lb_joint) : "",
      format_cell(r.wall_time_s),
  };
  return join(cells);
}

inline std::string render_trials_csv(const std::vector<TrialRecord>& records, const Metadata& meta) {
  std::string out = metadata_line("trials", meta) + '\n';
  out += join(kTrialColumns) + '\n';
  for (const auto& r : records) out += trial_row(r) + '\n';
  return out;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw IoError(fmt::format("failed writing {}", path.string()));
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(fmt::format("cannot open {} for reading", path.string()));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Parsing

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Parses a real number, accepting "nan"/"inf" as written by fmt.
inline std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> parse_integer(std::string_view s) {
  s = trim(s);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Parses the metadata comment line; returns nullopt when the version tag
/// is missing.
inline std::optional<Metadata> parse_metadata(std::string_view line) {
  line = trim(line);
  if (!line.starts_with('#')) return std::nullopt;
  line.remove_prefix(1);
  std::istringstream ss{std::string(line)};
  std::string token;
  if (!(ss >> token) || token != kCsvVersion) return std::nullopt;
  Metadata meta;
  while (ss >> token) {
    const auto eq = token.find('=');
    if (eq != std::string::npos) meta.emplace_back(token.substr(0, eq), token.substr(eq + 1));
  }
  return meta;
}

struct TrialTable {
  Metadata metadata;
  std::vector<TrialRecord> records;
};

/// Reads a per-trial table written by render_trials_csv. The column header
/// must match kTrialColumns exactly.
inline TrialTable parse_trials_csv(std::string_view text) {
  TrialTable table;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.starts_with('#')) {
      if (auto meta = parse_metadata(line)) {
        for (const auto& [k, v] : *meta) {
          if (k != "table") table.metadata.emplace_back(k, v);
        }
      }
      continue;
    }
    const auto fields = split_fields(line);
    if (!have_header) {
      if (fields.size() != kTrialColumns.size() ||
          !std::equal(fields.begin(), fields.end(), kTrialColumns.begin(),
                      [](const std::string& a, std::string_view b) { return trim(a) == b; })) {
        throw InputError(fmt::format("line {}: per-trial header does not match {} schema", line_no, kCsvVersion));
      }
      have_header = true;
      continue;
    }
    if (fields.size() != kTrialColumns.size()) {
      throw InputError(fmt::format("line {}: expected {} fields, got {}", line_no, kTrialColumns.size(), fields.size()));
    }
    auto need_int = [&](std::size_t i) {
      const auto v = parse_integer<std::int64_t>(fields[i]);
      if (!v) throw InputError(fmt::format("line {}: column {} is not an integer", line_no, kTrialColumns[i]));
      return *v;
    };
    auto maybe_real = [&](std::size_t i) -> std::optional<double> {
      if (trim(fields[i]).empty()) return std::nullopt;
      const auto v = parse_real(fields[i]);
      if (!v) throw InputError(fmt::format("line {}: column {} is not a number", line_no, kTrialColumns[i]));
      return v;
    };
    TrialRecord r;
    r.experiment = std::string(trim(fields[0]));
    r.grid_index = need_int(1);
    r.length = need_int(2);
    r.atom_length = need_int(3);
    r.atoms = need_int(4);
    r.sparsity = need_int(5);
    const auto lambda = maybe_real(6);
    if (!lambda) throw InputError(fmt::format("line {}: lambda is empty", line_no));
    r.lambda = *lambda;
    r.noise_kind = std::string(trim(fields[7]));
    r.trial = need_int(8);
    const auto seed = parse_integer<std::uint64_t>(fields[9]);
    if (!seed) throw InputError(fmt::format("line {}: seed is not an unsigned integer", line_no));
    r.seed = *seed;
    r.mse_csdl = maybe_real(10);
    r.mse_zero = maybe_real(11);
    r.mse_identity = maybe_real(12);
    r.final_objective = maybe_real(13);
    const auto ubc = maybe_real(14), ubj = maybe_real(15), lbc = maybe_real(16), lbj = maybe_real(17);
    if (ubc && ubj && lbc && lbj) r.bounds = BoundSet{*ubc, *ubj, *lbc, *lbj};
    r.wall_time_s = maybe_real(18);
    table.records.push_back(std::move(r));
  }
  if (!have_header) throw InputError("per-trial CSV has no header row");
  return table;
}

}  // namespace csdl::harness
