#pragma once

// Fitting a user-supplied signal and writing the factors and a report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "csdl/bounds.hpp"
#include "csdl/harness/csv.hpp"
#include "csdl/solver.hpp"

namespace csdl::harness {

/// Parses a one-column signal file: one real per line, with an optional
/// header. If the header has several columns, the `value` column is used.
/// Blank lines are ignored.
inline Signal parse_signal_csv(std::string_view text) {
  std::vector<double> values;
  std::optional<std::size_t> column;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first_content = true;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.starts_with('#')) continue;
    const auto fields = split_fields(line);
    if (first_content) {
      first_content = false;
      bool header = false;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (trim(fields[i]) == "value") {
          column = i;
          header = true;
        }
      }
      if (header) continue;
      if (fields.size() != 1) {
        throw InputError(fmt::format("line {}: multi-column input needs a header with a 'value' column", line_no));
      }
    }
    const std::size_t index = column.value_or(0);
    if (index >= fields.size()) throw InputError(fmt::format("line {}: missing 'value' field", line_no));
    const auto v = parse_real(fields[index]);
    if (!v || !std::isfinite(*v)) {
      throw InputError(fmt::format("line {}: cannot parse '{}' as a finite real", line_no, trim(fields[index])));
    }
    values.push_back(*v);
  }
  if (values.empty()) throw InputError("signal file contains no values");
  return Eigen::Map<const Signal>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline Signal read_signal_csv(const std::filesystem::path& path) { return parse_signal_csv(read_text_file(path)); }

inline std::string render_signal_csv(const Signal& x) {
  std::string out = "value\n";
  for (Eigen::Index i = 0; i < x.size(); ++i) out += format_real(x(i)) + '\n';
  return out;
}

/// Nonzero entries as (row, col, value) triplets.
inline std::string render_sparse_csv(const Matrix& r) {
  std::string out = "row,col,value\n";
  for (Eigen::Index k = 0; k < r.cols(); ++k) {
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      if (r(i, k) != 0.0) out += fmt::format("{},{},{}\n", i, k, format_real(r(i, k)));
    }
  }
  return out;
}

/// One row per atom coordinate, one column per atom.
inline std::string render_dense_csv(const Matrix& d) {
  std::vector<std::string> header;
  for (Eigen::Index k = 0; k < d.cols(); ++k) header.push_back(fmt::format("atom{}", k));
  std::string out = join(header) + '\n';
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    std::vector<std::string> cells;
    for (Eigen::Index k = 0; k < d.cols(); ++k) cells.push_back(format_real(d(i, k)));
    out += join(cells) + '\n';
  }
  return out;
}

struct FitOptions {
  std::filesystem::path input;
  std::optional<std::filesystem::path> truth;
  std::filesystem::path output_dir = ".";
  std::int64_t atom_length = 10;
  std::int64_t atoms = 5;
  std::optional<double> lambda;
  std::optional<double> lambda_prime;
  std::optional<double> delta;
  std::optional<double> sigma;
  /// Use sigma sqrt(2 n log(2N/delta)) instead of sigma sqrt(2 log(2N/delta)).
  bool lambda_prime_proof = false;
  int iterations = 200;
  double step_scale = 0.01;
  std::uint64_t seed = 0;
};

struct FitReport {
  SolveResult result;
  SolverConfig solver;
  nlohmann::ordered_json json;
};

inline SolverConfig fit_solver_config(const FitOptions& opt, std::int64_t length) {
  SolverConfig cfg;
  cfg.atom_length = opt.atom_length;
  cfg.atoms = opt.atoms;
  cfg.iterations = opt.iterations;
  cfg.step_scale = opt.step_scale;
  cfg.seed = opt.seed;
  const int modes = int(opt.lambda.has_value()) + int(opt.lambda_prime.has_value());
  if (modes > 1) throw ParameterError("fit: give either --lambda or --lambda-prime, not both");
  if (opt.lambda) {
    cfg.mode = SolverMode::constrained;
    cfg.lambda = *opt.lambda;
  } else if (opt.lambda_prime) {
    cfg.mode = SolverMode::penalized;
    cfg.lambda_prime = *opt.lambda_prime;
  } else if (opt.delta && opt.sigma) {
    cfg.mode = SolverMode::penalized;
    cfg.lambda_prime = opt.lambda_prime_proof
                           ? conservative_lambda_prime(*opt.sigma, length, opt.atom_length, *opt.delta)
                           : recommended_lambda_prime(*opt.sigma, length, *opt.delta);
  } else {
    throw ParameterError("fit: need --lambda, --lambda-prime, or both --delta and --sigma");
  }
  return cfg;
}

/// Solves, writes xhat.csv, rhat.csv, dhat.csv and report.json into
/// opt.output_dir, and returns the report.
inline FitReport run_fit(const FitOptions& opt) {
  const Signal y = read_signal_csv(opt.input);
  std::optional<Signal> truth;
  if (opt.truth) {
    truth = read_signal_csv(*opt.truth);
    if (truth->size() != y.size()) {
      throw InputError(fmt::format("truth has {} values but input has {}", truth->size(), y.size()));
    }
  }

  FitReport report;
  report.solver = fit_solver_config(opt, y.size());
  report.result = solve(y, report.solver);
  const auto& res = report.result;
  const auto big_n = static_cast<double>(y.size());

  auto& j = report.json;
  j["mode"] = std::string(to_string(report.solver.mode));
  j["N"] = y.size();
  j["n"] = opt.atom_length;
  j["K"] = opt.atoms;
  if (report.solver.mode == SolverMode::constrained) {
    j["lambda"] = report.solver.lambda;
  } else {
    j["lambda_prime"] = report.solver.lambda_prime;
  }
  j["iterations"] = res.iterations_run;
  j["seed"] = opt.seed;
  j["initial_objective"] = res.initial_objective;
  j["final_objective"] = res.final_objective;
  j["l11_norm"] = res.encoding.sum();

  if (opt.sigma) {
    BoundInputs in;
    in.length = y.size();
    in.atom_length = opt.atom_length;
    in.atoms = opt.atoms;
    in.sigma = *opt.sigma;
    auto& cert = j["certificates"];
    cert["sigma"] = *opt.sigma;
    if (report.solver.mode == SolverMode::constrained) {
      // Valid when lambda >= ||R||_{1,1} of the true encoding.
      in.lambda = report.solver.lambda;
      const BoundSet b = evaluate_bounds(in);
      cert["ub_componentwise"] = b.ub_componentwise;
      cert["ub_joint"] = b.ub_joint;
      cert["lb_componentwise"] = b.lb_componentwise;
      cert["lb_joint"] = b.lb_joint;
    } else if (opt.delta) {
      in.delta = *opt.delta;
      in.lambda_prime = report.solver.lambda_prime;
      cert["delta"] = *opt.delta;
      cert["ub_penalized"] = ub_penalized(in);
    }
  }
  if (truth) {
    auto& mse = j["mse"];
    mse["csdl"] = (res.reconstruction - *truth).squaredNorm() / big_n;
    mse["zero"] = truth->squaredNorm() / big_n;
    mse["identity"] = (y - *truth).squaredNorm() / big_n;
  }

  write_text_file(opt.output_dir / "xhat.csv", render_signal_csv(res.reconstruction));
  write_text_file(opt.output_dir / "rhat.csv", render_sparse_csv(res.encoding));
  write_text_file(opt.output_dir / "dhat.csv", render_dense_csv(res.dictionary));
  write_text_file(opt.output_dir / "report.json", j.dump(2) + '\n');
  return report;
}

}  // namespace csdl::harness
