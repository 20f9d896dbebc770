#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpc/errors.hpp"
#include "cpc/mlp.hpp"
#include "cpc/models.hpp"
#include "cpc/quadratic.hpp"
#include "cpc/rank.hpp"
#include "cpc/rng.hpp"
#include "cpc/split.hpp"

namespace cpc {

// Classifier selection plus every hyperparameter the CLI exposes. Fields set
// to 0 mean "resolve from the data dimensions"; reports always embed the
// resolved values so a run can be reproduced from its own output.
struct ClassifierConfig {
  std::string kind = "logistic";  // logistic | mlp | quadratic

  // logistic
  double lambda = 1e-4;
  int max_iter = 500;
  double tol = 1e-9;

  // mlp
  int hidden = 0;  // 0: min(2*(d1+d2), 256)
  double l1_penalty = 1e-4;
  double dropout = 0.1;
  int epochs = 50;
  int batch = 64;
  double step = 1e-3;
  std::string optimizer = "adam";  // adam | sgd

  // quadratic
  int s1 = 2;
  int k_n = 3;
  double quad_lambda = 0.0;  // 0: 2*sqrt(log(m)/n_train)

  ClassifierConfig resolved(Eigen::Index d1, Eigen::Index d2, Eigen::Index n_train) const {
    ClassifierConfig out = *this;
    if (kind == "mlp" && out.hidden == 0)
      out.hidden = static_cast<int>(std::min<Eigen::Index>(2 * (d1 + d2), 256));
    if (kind == "quadratic") {
      if (out.s1 > d1 + d2) out.s1 = static_cast<int>(d1 + d2);
      if (out.quad_lambda == 0.0) {
        BasisConfig bc{out.s1, out.k_n, BasisConfig{}.max_features};
        const double m = static_cast<double>(basis_dim(d1 + d2, bc));
        out.quad_lambda =
            2.0 * std::sqrt(std::log(std::max(m, 2.0)) / static_cast<double>(n_train));
      }
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}};
    if (kind == "logistic") {
      j["lambda"] = lambda;
      j["max_iter"] = max_iter;
      j["tol"] = tol;
    } else if (kind == "mlp") {
      j["hidden"] = hidden;
      j["l1_penalty"] = l1_penalty;
      j["dropout"] = dropout;
      j["epochs"] = epochs;
      j["batch"] = batch;
      j["step"] = step;
      j["optimizer"] = optimizer;
    } else if (kind == "quadratic") {
      j["s1"] = s1;
      j["k_n"] = k_n;
      j["lambda"] = quad_lambda;
    }
    return j;
  }
};

struct TestReport {
  double r = 0.0;
  double sigma_hat_sq = 0.0;
  double statistic = 0.0;
  double p_value = 0.0;
  long long tie_count = 0;
  bool variance_floored = false;
  std::uint64_t seed = 0;
  nlohmann::json classifier;

  nlohmann::json to_json() const {
    return {{"R", r},
            {"sigma_hat_sq", sigma_hat_sq},
            {"statistic", statistic},
            {"p_value", p_value},
            {"tie_count", tie_count},
            {"variance_floored", variance_floored},
            {"seed", seed},
            {"classifier", classifier}};
  }
};

namespace detail {

// Seed layout for one test run: component streams must not collide with each
// other or with other replicates, so each is derived from (seed, tag).
inline constexpr std::uint64_t kFitTag = 0x66697400;   // "fit"
inline constexpr std::uint64_t kTieTag = 0x74696500;   // "tie"

}  // namespace detail

template <typename Sample>
std::unique_ptr<ScoreModel> fit_classifier(const TrainEvalTables& tables,
                                           const ClassifierConfig& resolved,
                                           std::uint64_t fit_seed) {
  if (resolved.kind == "logistic") {
    LogisticOptions opts;
    opts.max_iter = resolved.max_iter;
    opts.tol = resolved.tol;
    opts.seed = fit_seed;
    auto m = fit_logistic_l1(tables.train_features, tables.train_labels, resolved.lambda, opts);
    return std::make_unique<LinearScoreModel>(std::move(m));
  }
  if (resolved.kind == "mlp") {
    MlpOptions opts;
    opts.l1_penalty = resolved.l1_penalty;
    opts.dropout_rate = resolved.dropout;
    opts.epochs = resolved.epochs;
    opts.batch = resolved.batch;
    opts.step = resolved.step;
    opts.optimizer = resolved.optimizer;
    opts.seed = fit_seed;
    auto m = fit_mlp(tables.train_features, tables.train_labels, resolved.hidden, opts);
    return std::make_unique<MlpScoreModel>(std::move(m));
  }
  if (resolved.kind == "quadratic") {
    const Eigen::Index m1 = tables.train_features.rows() / 2;
    BasisConfig bc{resolved.s1, resolved.k_n, BasisConfig{}.max_features};
    auto m = fit_penalized_quadratic(tables.train_features.topRows(m1),
                                     tables.train_features.bottomRows(m1), bc,
                                     resolved.quad_lambda);
    return std::make_unique<QuadScoreModel>(std::move(m));
  }
  fail(errc::invalid_model, "unknown classifier kind '" + resolved.kind + "'");
}

// The full pipeline: split, cyclically permute, train joint-vs-permuted,
// score the held-out half, rank-sum, variance, left-tail p-value. Small R
// means permuted pairs outscore joint pairs, i.e. evidence of dependence, so
// rejection is for small values of the standardized statistic.
template <typename Sample>
TestReport cpc_test(const Sample& sample, const ClassifierConfig& config, std::uint64_t seed) {
  const SplitPlan plan = split_indices(sample.n(), seed);
  const TrainEvalTables tables = build_training_sets(sample, plan);
  const ClassifierConfig resolved =
      config.resolved(sample.d1(), sample.d2(), tables.train_features.rows() / 2);

  auto model =
      fit_classifier<Sample>(tables, resolved, derive_seed(seed, detail::kFitTag));

  ScoredEvaluation eval;
  eval.s_joint = to_vector(predict_scores(*model, tables.eval_joint));
  eval.s_prod = to_vector(predict_scores(*model, tables.eval_prod));

  // R and sigma_hat share one tie seed so ties are broken by one consistent
  // lexicographic ordering across the whole statistic.
  const std::uint64_t tie_seed = derive_seed(seed, detail::kTieTag);
  const RankSum rank = rank_sum_R(eval, tie_seed);
  const VarianceEstimate var = variance_hat(eval, tie_seed);
  const double n2 = static_cast<double>(eval.n2());

  TestReport report;
  report.r = rank.r;
  report.sigma_hat_sq = var.value;
  report.statistic = std::sqrt(n2) * (rank.r - 0.5) / std::sqrt(var.value);
  report.p_value = normal_cdf(report.statistic);
  report.tie_count = rank.tie_pairs;
  report.variance_floored = var.floored;
  report.seed = seed;

  nlohmann::json meta = resolved.to_json();
  meta["converged"] = model->diagnostics.converged;
  meta["warnings"] = model->diagnostics.warnings;
  if (auto* lin = dynamic_cast<const LinearScoreModel*>(model.get()))
    meta["zero_weights"] = lin->zero_weight_count();
  if (auto* quad = dynamic_cast<const QuadScoreModel*>(model.get()))
    meta["nonzeros"] = quad->nonzeros();
  report.classifier = std::move(meta);
  return report;
}

}  // namespace cpc
