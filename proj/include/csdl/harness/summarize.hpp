#pragma once

// Aggregation of per-trial rows into one summary row per grid point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "csdl/harness/csv.hpp"

namespace csdl::harness {

struct MetricStats {
  double mean = 0.0;
  /// Sample standard deviation over sqrt(count); 0 for a single value.
  double stderr_ = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::int64_t count = 0;
};

inline std::optional<MetricStats> describe(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  MetricStats s;
  s.count = static_cast<std::int64_t>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double variance = ss / static_cast<double>(values.size() - 1);
    s.stderr_ = std::sqrt(variance / static_cast<double>(values.size()));
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

struct SummaryRow {
  std::string experiment;
  std::int64_t grid_index = 0;
  std::int64_t length = 0;
  std::int64_t atom_length = 0;
  std::int64_t atoms = 0;
  std::int64_t sparsity = 0;
  double lambda = 0.0;
  std::string noise_kind;
  std::int64_t trials = 0;
  std::int64_t failures = 0;
  /// Only one successful trial: stderr columns are 0 by convention.
  bool single_trial = false;
  std::optional<MetricStats> mse_csdl, mse_zero, mse_identity, final_objective;
  std::optional<BoundSet> bounds;

  const std::optional<MetricStats>& metric(std::string_view name) const {
    if (name == "mse_csdl") return mse_csdl;
    if (name == "mse_zero") return mse_zero;
    if (name == "mse_identity") return mse_identity;
    return final_objective;
  }
};

inline std::vector<std::string> summary_columns() {
  std::vector<std::string> cols = {"experiment", "grid_index", "N",      "n",        "K",           "sparsity",
                                   "lambda",     "noise_kind", "trials", "failures", "single_trial"};
  for (const auto m : kMetricColumns) {
    for (const auto stat : {"mean", "stderr", "min", "max"}) cols.push_back(fmt::format("{}_{}", m, stat));
  }
  for (const auto b : {"ub_componentwise", "ub_joint", "lb_componentwise", "lb_joint"}) cols.emplace_back(b);
  return cols;
}

/// Groups rows by (experiment, grid_index). Groups with no successful trial
/// are dropped; a warning is written to `warnings` when given.
inline std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records, std::ostream* warnings = nullptr) {
  std::map<std::pair<std::string, std::int64_t>, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) groups[{r.experiment, r.grid_index}].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : groups) {
    std::vector<double> csdl, zero, identity, objective, ubc, ubj, lbc, lbj;
    std::int64_t failures = 0;
    for (const auto* r : members) {
      if (r->failed()) {
        ++failures;
        continue;
      }
      csdl.push_back(*r->mse_csdl);
      if (r->mse_zero) zero.push_back(*r->mse_zero);
      if (r->mse_identity) identity.push_back(*r->mse_identity);
      if (r->final_objective) objective.push_back(*r->final_objective);
      if (r->bounds) {
        ubc.push_back(r->bounds->ub_componentwise);
        ubj.push_back(r->bounds->ub_joint);
        lbc.push_back(r->bounds->lb_componentwise);
        lbj.push_back(r->bounds->lb_joint);
      }
    }
    if (csdl.empty()) {
      if (warnings) {
        *warnings << fmt::format("warning: {} grid point {} has no successful trials; skipped\n", key.first,
                                 key.second);
      }
      continue;
    }
    const TrialRecord& head = *members.front();
    SummaryRow row;
    row.experiment = head.experiment;
    row.grid_index = head.grid_index;
    row.length = head.length;
    row.atom_length = head.atom_length;
    row.atoms = head.atoms;
    row.sparsity = head.sparsity;
    row.lambda = head.lambda;
    row.noise_kind = head.noise_kind;
    row.trials = static_cast<std::int64_t>(csdl.size());
    row.failures = failures;
    row.single_trial = csdl.size() == 1;
    row.mse_csdl = describe(csdl);
    row.mse_zero = describe(zero);
    row.mse_identity = describe(identity);
    row.final_objective = describe(objective);
    if (!ubc.empty()) {
      // Bounds depend only on the grid point, so the mean is a copy.
      row.bounds = BoundSet{describe(ubc)->mean, describe(ubj)->mean, describe(lbc)->mean, describe(lbj)->mean};
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string render_summary_csv(const std::vector<SummaryRow>& rows, const Metadata& meta) {
  std::string out = metadata_line("summary", meta) + '\n';
  out += join(summary_columns()) + '\n';
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.experiment,
                                      std::to_string(r.grid_index),
                                      std::to_string(r.length),
                                      std::to_string(r.atom_length),
                                      std::to_string(r.atoms),
                                      std::to_string(r.sparsity),
                                      format_real(r.lambda),
                                      r.noise_kind,
                                      std::to_string(r.trials),
                                      std::to_string(r.failures),
                                      r.single_trial ? "1" : "0"};
    for (const auto m : kMetricColumns) {
      const auto& s = r.metric(m);
      for (const auto v : {&MetricStats::mean, &MetricStats::stderr_, &MetricStats::min, &MetricStats::max}) {
        cells.push_back(s ? format_real((*s).*v) : "");
      }
    }
    for (const auto b : {&BoundSet::ub_componentwise, &BoundSet::ub_joint, &BoundSet::lb_componentwise,
                         &BoundSet::lb_joint}) {
      cells.push_back(r.bounds ? format_real((*r.bounds).*b) : "");
    }
    out += join(cells) + '\n';
  }
  return out;
}

/// Reads a per-trial CSV and writes its summary next to `output`.
inline std::vector<SummaryRow> summarize_file(const std::filesystem::path& input, const std::filesystem::path& output,
                                              std::ostream* warnings = nullptr) {
  const TrialTable table = parse_trials_csv(read_text_file(input));
  auto rows = summarize(table.records, warnings);
  write_text_file(output, render_summary_csv(rows, table.metadata));
  return rows;
}

}  // namespace csdl::harness
