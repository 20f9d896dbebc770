#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cpc/dcor.hpp"
#include "cpc/rank.hpp"
#include "cpc/sim.hpp"
#include "cpc/test.hpp"

namespace cpc {

struct BenchConfig {
  std::vector<Eigen::Index> n_grid{1000, 2000};
  std::vector<Eigen::Index> d_grid{10};
  std::vector<std::string> methods{"cpc", "dcor", "rank"};
  int reps = 3;
  ClassifierConfig classifier;
  std::uint64_t seed = 42;
};

struct BenchRow {
  std::string method;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  double seconds = 0.0;       // median over reps
  double rank_seconds = std::numeric_limits<double>::quiet_NaN();  // cpc only
};

namespace detail {

inline volatile double bench_sink = 0.0;

// Median wall time of one call: the body repeats until it accumulates 50ms so
// sub-millisecond work is still resolvable on a coarse clock.
template <typename Fn>
double time_block(Fn&& fn) {
  using clock = std::chrono::steady_clock;
  long long iters = 1;
  for (;;) {
    const auto t0 = clock::now();
    for (long long i = 0; i < iters; ++i) fn();
    const double sec = std::chrono::duration<double>(clock::now() - t0).count();
    if (sec >= 0.05 || iters >= (1LL << 30)) return sec / static_cast<double>(iters);
    iters *= (sec <= 0.001) ? 16 : 2;
  }
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace detail

// Wall-clock scaling table. "rank" times the rank-sum statistic alone on
// synthetic tie-free scores (d is ignored there); "dcor" times one distance
// correlation evaluation; "cpc" times the full test and also reports its
// rank-sum portion.
inline std::vector<BenchRow> timing_bench(const BenchConfig& cfg) {
  std::vector<BenchRow> rows;
  for (const auto& method : cfg.methods)
    require(method == "cpc" || method == "dcor" || method == "rank", errc::invalid_model,
            "unknown bench method '" + method + "'");

  for (const std::string& method : cfg.methods)
    for (Eigen::Index n : cfg.n_grid)
      for (Eigen::Index d : cfg.d_grid) {
        BenchRow row;
        row.method = method;
        row.n = n;
        row.d = d;
        std::vector<double> times;

        if (method == "rank") {
          Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(n)));
          ScoredEvaluation eval;
          eval.s_joint.resize(static_cast<std::size_t>(n));
          eval.s_prod.resize(static_cast<std::size_t>(n));
          for (auto& s : eval.s_joint) s = rng.uniform01();
          for (auto& s : eval.s_prod) s = rng.uniform01();
          const std::uint64_t tie_seed = derive_seed(cfg.seed, 7);
          for (int r = 0; r < cfg.reps; ++r)
            times.push_back(detail::time_block(
                [&] { detail::bench_sink = rank_sum_R(eval, tie_seed).r; }));
        } else {
          SimModel model;
          model.id = SimModelId::m1;
          model.a = 1.0;
          model.d1 = d;
          model.d2 = d;
          const PairedSample sample =
              generate(model, n, derive_seed(cfg.seed, static_cast<std::uint64_t>(n),
                                             static_cast<std::uint64_t>(d)));
          if (method == "dcor") {
            for (int r = 0; r < cfg.reps; ++r)
              times.push_back(detail::time_block(
                  [&] { detail::bench_sink = distance_correlation(sample.x, sample.y).dcor; }));
          } else {
            for (int r = 0; r < cfg.reps; ++r)
              times.push_back(detail::time_block(
                  [&] { detail::bench_sink = cpc_test(sample, cfg.classifier, cfg.seed).r; }));
            // rank-sum share, measured on the same scores the test produces
            const SplitPlan plan = split_indices(sample.n(), cfg.seed);
            const TrainEvalTables tables = build_training_sets(sample, plan);
            const ClassifierConfig resolved = cfg.classifier.resolved(
                sample.d1(), sample.d2(), tables.train_features.rows() / 2);
            auto fitted = fit_classifier<PairedSample>(tables, resolved,
                                                       derive_seed(cfg.seed, detail::kFitTag));
            ScoredEvaluation eval;
            eval.s_joint = to_vector(predict_scores(*fitted, tables.eval_joint));
            eval.s_prod = to_vector(predict_scores(*fitted, tables.eval_prod));
            const std::uint64_t tie_seed = derive_seed(cfg.seed, detail::kTieTag);
            row.rank_seconds = detail::time_block(
                [&] { detail::bench_sink = rank_sum_R(eval, tie_seed).r; });
          }
        }
        row.seconds = detail::median_of(times);
        rows.push_back(std::move(row));
      }
  return rows;
}

}  // namespace cpc
