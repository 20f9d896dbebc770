#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cpc/dcor.hpp"
#include "cpc/errors.hpp"
#include "cpc/rng.hpp"
#include "cpc/sim.hpp"
#include "cpc/test.hpp"

namespace cpc {

namespace detail {

// Runs fn(0..count-1) over a small worker pool. Each job writes only its own
// preallocated slot, so results are independent of scheduling order; jobs <= 1
// runs inline.
template <typename Fn>
void run_jobs(int jobs, std::size_t count, Fn&& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const auto workers = static_cast<std::size_t>(
      std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

// One-sample Kolmogorov-Smirnov distance of `values` from the standard normal.
inline double ks_distance_normal(std::vector<double> values) {
  require(!values.empty(), errc::empty_input, "empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = normal_cdf(values[i]);
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

// Same statistic against U(0,1), for p-value calibration checks.
inline double ks_distance_uniform(std::vector<double> values) {
  require(!values.empty(), errc::empty_input, "empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = std::clamp(values[i], 0.0, 1.0);
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

// Chi-square uniformity statistic over equal-width bins on [0,1].
inline double chi_square_uniform(const std::vector<double>& p_values, int bins) {
  require(!p_values.empty(), errc::empty_input, "empty sample");
  require(bins >= 2, errc::dimension_mismatch, "need at least 2 bins");
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double p : p_values) {
    auto k = static_cast<long long>(std::clamp(p, 0.0, 1.0 - 1e-12) * bins);
    counts[static_cast<std::size_t>(k)] += 1.0;
  }
  const double expected = static_cast<double>(p_values.size()) / bins;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  return stat;
}

struct PowerConfig {
  std::vector<SimModel> models;  // the `a` field of each entry is ignored
  std::vector<double> a_grid{0.0, 0.5, 1.0};
  Eigen::Index n = 1000;
  std::vector<double> alphas{0.05};
  int reps = 500;
  std::vector<std::string> methods{"cpc"};  // cpc | dcor
  ClassifierConfig classifier;
  int dcor_permutations = 200;
  std::uint64_t master_seed = 42;
  int jobs = 1;
};

// One replicate outcome: p-values per method on one shared dataset.
struct PowerRepRow {
  std::string model;
  double a = 0.0;
  std::string method;
  int rep = 0;
  double p_value = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
};

struct PowerCell {
  std::string model;
  double a = 0.0;
  std::string method;
  double alpha = 0.0;
  double rejection_rate = 0.0;
  double mc_se = 0.0;
  int reps = 0;
  int failures = 0;
};

struct PowerResult {
  std::vector<PowerRepRow> rows;
  std::vector<PowerCell> cells;
  std::vector<std::uint64_t> dataset_seeds;
};

namespace detail {

inline constexpr std::uint64_t kDcorSeedTag = 0x64636f72;  // method-local stream

}  // namespace detail

// Runs each method on independently seeded datasets per (model, a, rep) cell;
// methods share the replicate's dataset, mirroring a paired comparison. The
// per-replicate seed is derive_seed(master_seed, model_index, a_index, rep),
// which the acceptance suite asserts to be collision-free.
inline PowerResult power_experiment(const PowerConfig& cfg) {
  require(cfg.reps >= 1, errc::empty_input, "reps must be >= 1");
  require(!cfg.models.empty(), errc::empty_input, "no models configured");
  require(!cfg.a_grid.empty(), errc::empty_input, "empty a grid");
  require(!cfg.methods.empty(), errc::empty_input, "no methods configured");
  for (const auto& m : cfg.methods)
    require(m == "cpc" || m == "dcor", errc::invalid_model, "unknown method '" + m + "'");

  const std::size_t cells = cfg.models.size() * cfg.a_grid.size();
  const std::size_t total = cells * static_cast<std::size_t>(cfg.reps);

  PowerResult out;
  out.dataset_seeds.resize(total);
  out.rows.resize(total * cfg.methods.size());

  detail::run_jobs(cfg.jobs, total, [&](std::size_t job) {
    const std::size_t cell = job / static_cast<std::size_t>(cfg.reps);
    const int rep = static_cast<int>(job % static_cast<std::size_t>(cfg.reps));
    const std::size_t model_idx = cell / cfg.a_grid.size();
    const std::size_t a_idx = cell % cfg.a_grid.size();

    SimModel model = cfg.models[model_idx];
    model.a = cfg.a_grid[a_idx];
    const std::uint64_t seed =
        derive_seed(cfg.master_seed, static_cast<std::uint64_t>(model_idx),
                    static_cast<std::uint64_t>(a_idx), static_cast<std::uint64_t>(rep));
    out.dataset_seeds[job] = seed;

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      PowerRepRow row;
      row.model = model_name(model.id);
      row.a = model.a;
      row.method = cfg.methods[mi];
      row.rep = rep;
      try {
        const PairedSample sample = generate(model, cfg.n, seed);
        if (row.method == "cpc") {
          row.p_value = cpc_test(sample, cfg.classifier, seed).p_value;
        } else {
          row.p_value = *dcor_test(sample.x, sample.y, cfg.dcor_permutations,
                                   derive_seed(seed, detail::kDcorSeedTag))
                             .p_value;
        }
      } catch (const error&) {
        row.failed = true;
      }
      out.rows[job * cfg.methods.size() + mi] = std::move(row);
    }
  });

  // aggregate: one cell per (model, a, method, alpha)
  for (std::size_t model_idx = 0; model_idx < cfg.models.size(); ++model_idx)
    for (std::size_t a_idx = 0; a_idx < cfg.a_grid.size(); ++a_idx)
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
        for (double alpha : cfg.alphas) {
          PowerCell cell;
          cell.model = model_name(cfg.models[model_idx].id);
          cell.a = cfg.a_grid[a_idx];
          cell.method = cfg.methods[mi];
          cell.alpha = alpha;
          int rejections = 0, ok = 0, failures = 0;
          const std::size_t cell_base =
              (model_idx * cfg.a_grid.size() + a_idx) * static_cast<std::size_t>(cfg.reps);
          for (int rep = 0; rep < cfg.reps; ++rep) {
            const auto& row =
                out.rows[(cell_base + static_cast<std::size_t>(rep)) * cfg.methods.size() + mi];
            if (row.failed) {
              ++failures;
              continue;
            }
            ++ok;
            if (row.p_value <= alpha) ++rejections;
          }
          cell.reps = ok;
          cell.failures = failures;
          if (ok > 0) {
            cell.rejection_rate = static_cast<double>(rejections) / ok;
            cell.mc_se = std::sqrt(cell.rejection_rate * (1.0 - cell.rejection_rate) / ok);
          }
          out.cells.push_back(std::move(cell));
        }
  return out;
}

struct CalibrationConfig {
  Eigen::Index n = 2000;
  Eigen::Index d1 = 2;
  Eigen::Index d2 = 2;
  int reps = 500;
  ClassifierConfig classifier;
  std::uint64_t master_seed = 42;
  int jobs = 1;
};

struct CalibrationResult {
  std::vector<double> statistics;  // per replicate, in replicate order
  std::vector<double> p_values;
  double ks_normal = 0.0;       // statistics vs N(0,1)
  double ks_uniform_p = 0.0;    // p-values vs U(0,1)
  double chi_square_p = 0.0;    // 20-bin uniformity of p-values
  int floored = 0;
  double mean_statistic = 0.0;
  // rows (theoretical normal quantile, observed statistic quantile)
  std::vector<std::pair<double, double>> qq;
};

// Null-calibration study: independent standard normal X and Y, one test per
// replicate, empirical law of the standardized statistic against N(0,1).
inline CalibrationResult null_calibration(const CalibrationConfig& cfg) {
  require(cfg.reps >= 50, errc::empty_input, "need at least 50 replications");

  CalibrationResult out;
  out.statistics.resize(static_cast<std::size_t>(cfg.reps));
  out.p_values.resize(static_cast<std::size_t>(cfg.reps));
  std::vector<int> floored(static_cast<std::size_t>(cfg.reps), 0);

  SimModel null_model;
  null_model.id = SimModelId::m1;
  null_model.a = 0.0;
  null_model.d1 = cfg.d1;
  null_model.d2 = cfg.d2;

  detail::run_jobs(cfg.jobs, static_cast<std::size_t>(cfg.reps), [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(rep) + 1);
    const PairedSample sample = generate(null_model, cfg.n, seed);
    const TestReport report = cpc_test(sample, cfg.classifier, seed);
    out.statistics[rep] = report.statistic;
    out.p_values[rep] = report.p_value;
    floored[rep] = report.variance_floored ? 1 : 0;
  });

  for (int f : floored) out.floored += f;
  out.ks_normal = ks_distance_normal(out.statistics);
  out.ks_uniform_p = ks_distance_uniform(out.p_values);
  out.chi_square_p = chi_square_uniform(out.p_values, 20);
  double sum = 0.0;
  for (double s : out.statistics) sum += s;
  out.mean_statistic = sum / cfg.reps;

  std::vector<double> sorted = out.statistics;
  std::sort(sorted.begin(), sorted.end());
  out.qq.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(sorted.size());
    out.qq.emplace_back(normal_quantile(p), sorted[i]);
  }
  return out;
}

}  // namespace cpc
