// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Desk-scale experiment tables are written
// to the directory given as the first argument (default: acceptance_out).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "csdl/csdl.hpp"
#include "oracles.hpp"

using namespace csdl;
using namespace csdl::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(std::string_view name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.pass) ++failures;
  std::cout << fmt::format("{}  {:<22} {} [{:.1f}s]", out.pass ? "PASS" : "FAIL", name, out.detail, secs)
            << std::endl;
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

/// Mean of a metric over successful trials, keyed by grid index.
std::map<std::int64_t, double> mean_by_grid(const std::vector<TrialRecord>& recs,
                                            std::optional<double> TrialRecord::*field) {
  std::map<std::int64_t, std::pair<double, int>> acc;
  for (const auto& r : recs) {
    if (!(r.*field)) continue;
    auto& [sum, count] = acc[r.grid_index];
    sum += *(r.*field);
    ++count;
  }
  std::map<std::int64_t, double> out;
  for (const auto& [g, sc] : acc) out[g] = sc.first / sc.second;
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

ExperimentConfig desk(ExperimentId id, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.experiment = id;
  cfg.master_seed = 0;
  cfg.workers = workers();
  cfg.output_dir = out;
  return cfg;
}

Outcome bound_values() {
  BoundInputs in;
  in.length = 1000;
  in.atom_length = 10;
  in.lambda = 100;
  in.sigma = 0.1;
  const BoundSet b = evaluate_bounds(in);
  const bool ok = std::abs(b.ub_componentwise - 0.49320) <= 1e-4 && std::abs(b.ub_joint - 0.15587) <= 1e-4 &&
                  std::abs(b.lb_componentwise - 0.010382) <= 1e-5 && std::abs(b.lb_joint - 0.0032831) <= 1e-6;
  return {ok, fmt::format("ub_c={:.6g} ub_j={:.6g} lb_c={:.6g} lb_j={:.6g}", b.ub_componentwise, b.ub_joint,
                          b.lb_componentwise, b.lb_joint)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto n = std::uniform_int_distribution<Eigen::Index>(1, 8)(rng);
    const auto big_n = std::uniform_int_distribution<Eigen::Index>(n, 50)(rng);
    const auto k = std::uniform_int_distribution<Eigen::Index>(1, 3)(rng);
    const Matrix r = gaussian(rng, big_n - n + 1, k);
    const Matrix d = gaussian(rng, n, k);
    const Signal y = gaussian(rng, big_n, 1);
    const auto analytic = objective_and_gradients(y, r, d);
    const auto numeric = oracle::finite_differences(y, r, d, 1e-6);
    const double err_r = (analytic.grad_encoding - numeric.grad_r).cwiseAbs().maxCoeff() /
                         std::max(numeric.grad_r.cwiseAbs().maxCoeff(), 1e-12);
    const double err_d = (analytic.grad_dictionary - numeric.grad_d).cwiseAbs().maxCoeff() /
                         std::max(numeric.grad_d.cwiseAbs().maxCoeff(), 1e-12);
    worst = std::max({worst, err_r, err_d});
  }
  return {worst < 1e-5, fmt::format("max relative error {:.3g} over 100 instances", worst)};
}

Outcome projection_oracle() {
  std::mt19937_64 rng(3);
  double worst_margin = std::numeric_limits<double>::infinity();
  bool feasible = true;
  for (int t = 0; t < 1000; ++t) {
    const auto size = std::uniform_int_distribution<int>(1, 6)(rng);
    const auto cols = (size % 2 == 0 && rng() % 2) ? 2 : 1;
    const Matrix r = 1.5 * gaussian(rng, size / cols, cols);
    const double radius = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    const Matrix p = project_nonneg_l11_ball(r, radius);
    feasible = feasible && p.minCoeff() >= 0.0 && p.sum() <= radius * (1 + 1e-12);
    const std::vector<double> v(r.data(), r.data() + r.size());
    const double grid = oracle::lattice_min_squared_distance(v, radius, 1e-3);
    worst_margin = std::min(worst_margin, grid - (p - r).squaredNorm());
  }
  return {feasible && worst_margin >= -1e-6,
          fmt::format("min margin {:.3g}, feasible={} over 1000 inputs", worst_margin, feasible)};
}

Outcome young_invariant() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto n = std::uniform_int_distribution<Eigen::Index>(1, 12)(rng);
    const auto big_n = std::uniform_int_distribution<Eigen::Index>(n, 80)(rng);
    const auto k = std::uniform_int_distribution<Eigen::Index>(1, 4)(rng);
    const double radius = std::uniform_real_distribution<double>(0.0, 20.0)(rng);
    const Matrix r = project_nonneg_l11_ball<double>(3.0 * gaussian(rng, big_n - n + 1, k), radius);
    const Matrix d = project_columns_to_sphere<double>(gaussian(rng, n, k));
    const Signal x = multi_convolve(r, d);
    for (const double q : {1.0, 2.0, kInf}) {
      const double rhs = lpq_norm(r, 1, 1) * lpq_norm(d, q, kInf);
      if (rhs > 0) worst = std::max(worst, vector_p_norm(x, q) / rhs);
      else if (vector_p_norm(x, q) > 0) worst = kInf;
    }
  }
  return {worst <= 1.0 + 1e-12, fmt::format("max ||R*D||_q / (||R||_11 ||D||_q,inf) = {:.6f}", worst)};
}

Outcome exp1_sandwich(const fs::path& out) {
  auto cfg = desk(ExperimentId::exp1, out);
  cfg.sparsity_rule = SparsityRule::floor_sqrt_N;
  cfg.trials = 50;
  const auto result = run_experiment(cfg);
  std::vector<double> lengths, means;
  bool sandwich = true;
  std::string detail;
  for (const auto& row : result.summary) {
    const double mean = row.mse_csdl->mean;
    const bool inside = row.bounds && mean <= row.bounds->ub_joint && mean >= row.bounds->lb_joint;
    sandwich = sandwich && inside && row.failures == 0;
    lengths.push_back(static_cast<double>(row.length));
    means.push_back(mean);
    detail += fmt::format("N={}:{:.4g}{} ", row.length, mean, inside ? "" : "(outside)");
  }
  const double slope = loglog_slope(lengths, means);
  const bool slope_ok = slope >= -1.3 && slope <= -0.5;
  return {sandwich && slope_ok && result.summary.size() == 4,
          fmt::format("{}slope={:.3f} (need [-1.3,-0.5]) sandwich={}", detail, slope, sandwich)};
}

Outcome exp2_separation(const fs::path& out) {
  auto cfg = desk(ExperimentId::exp2, out);
  cfg.trials = 30;
  const auto result = run_experiment(cfg);
  std::map<std::string, std::map<std::int64_t, double>> mse;
  for (const auto& row : result.summary) mse[row.noise_kind][row.atom_length] = row.mse_csdl->mean;
  const double corr = mse.at("correlated").at(316) / mse.at("correlated").at(10);
  const double iid = mse.at("iid").at(316) / mse.at("iid").at(10);
  return {corr >= 2.0 && iid <= 2.0,
          fmt::format("mse(n=316)/mse(n=10): correlated={:.3f} (need >= 2), iid={:.3f} (need <= 2)", corr, iid)};
}

Outcome exp3_robustness(const fs::path& out) {
  auto cfg = desk(ExperimentId::exp3, out);
  const auto result = run_experiment(cfg);
  const double s = static_cast<double>(floor_sqrt(cfg.length));
  std::vector<double> upper;
  std::string detail;
  for (const auto& row : result.summary) {
    detail += fmt::format("lambda={:g}:{:.4g} ", row.lambda, row.mse_csdl->mean);
    if (row.lambda >= s) upper.push_back(row.mse_csdl->mean);
  }
  const auto [lo, hi] = std::minmax_element(upper.begin(), upper.end());
  const double ratio = *hi / *lo;
  return {upper.size() == 3 && ratio <= 2.0, fmt::format("{}max/min over lambda>=s = {:.3f}", detail, ratio)};
}

Outcome exp4_heavy_tail(const fs::path& out) {
  auto cfg = desk(ExperimentId::exp4, out);
  cfg.sparsity_rule = SparsityRule::floor_N_over_10;
  cfg.sweep = {100, 1000};
  const auto result = run_experiment(cfg);
  const auto csdl = mean_by_grid(result.records, &TrialRecord::mse_csdl);
  const auto zero = mean_by_grid(result.records, &TrialRecord::mse_zero);
  const auto identity = mean_by_grid(result.records, &TrialRecord::mse_identity);
  const bool no_decrease = csdl.at(1) >= 0.8 * csdl.at(0);
  bool zero_best = true;
  for (std::int64_t g = 0; g < 2; ++g) {
    zero_best = zero_best && zero.at(g) <= csdl.at(g);
    if (identity.count(g)) zero_best = zero_best && zero.at(g) <= identity.at(g);
  }
  return {no_decrease && zero_best,
          fmt::format("mse_csdl N=100:{:.4g} N=1000:{:.4g}; mse_zero N=100:{:.4g} N=1000:{:.4g}", csdl.at(0),
                      csdl.at(1), zero.at(0), zero.at(1))};
}

Outcome determinism(const fs::path& out) {
  // Every run writes to a fresh directory; a rerun must reproduce
  // the per-trial CSV byte for byte at 1 and 8 workers.
  const std::vector<std::string> flags = {"exp1 --trials 3 --seed 11", "exp2 --trials 2 --grid 10,32 --seed 11",
                                          "exp3 --trials 3 --seed 11", "exp4 --trials 3 --grid 100,316 --seed 11"};
  std::string detail;
  bool ok = true;
  for (const auto& f : flags) {
    const auto name = f.substr(0, 4);
    std::vector<std::string> texts;
    for (const int w : {1, 1, 8, 8}) {
      const auto dir = out / "determinism" / fmt::format("{}_w{}_{}", name, w, texts.size());
      fs::remove_all(dir);
      const auto cmd = fmt::format("{} {} --workers {} --out {} >/dev/null 2>&1", CSDL_CLI_PATH, f, w, dir.string());
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        return {false, fmt::format("'{}' exited with status {}", cmd, status)};
      }
      texts.push_back(read_text_file(dir / (name + "_trials.csv")));
    }
    const bool same_w1 = texts[0] == texts[1];
    const bool same_w8 = texts[2] == texts[3];
    ok = ok && same_w1 && same_w8;
    detail += fmt::format("{}:w1={} w8={} cross={} ", name, same_w1 ? "same" : "DIFF", same_w8 ? "same" : "DIFF",
                          texts[0] == texts[2] ? "same" : "diff");
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::create_directories(out);
  std::cout << fmt::format("acceptance: writing desk-scale tables to {}", out.string()) << std::endl;

  report("bound-values", bound_values);
  report("gradient-check", gradient_check);
  report("projection-oracle", projection_oracle);
  report("young-invariant", young_invariant);
  report("exp1-sandwich", [&] { return exp1_sandwich(out); });
  report("exp2-noise-separation", [&] { return exp2_separation(out); });
  report("exp3-lambda-robustness", [&] { return exp3_robustness(out); });
  report("exp4-heavy-tail", [&] { return exp4_heavy_tail(out); });
  report("determinism", [&] { return determinism(out); });

  std::cout << fmt::format("{} of 9 criteria failed", failures) << std::endl;
  return failures == 0 ? 0 : 1;
}
