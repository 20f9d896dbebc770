#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpc/basis.hpp"
#include "cpc/errors.hpp"
#include "cpc/models.hpp"

namespace cpc {

// Classifier over the expanded basis: score(z) = clamp(xi(z)' beta).
// The linear form is used directly as a class-probability estimate, so the
// clamp keeps the downstream rank and KL statistics well defined.
class QuadScoreModel : public ScoreModel {
 public:
  Eigen::VectorXd beta;
  BasisConfig cfg;
  Eigen::Index raw_dim = 0;

  QuadScoreModel() = default;
  QuadScoreModel(Eigen::VectorXd beta_, BasisConfig cfg_, Eigen::Index raw_dim_)
      : beta(std::move(beta_)), cfg(cfg_), raw_dim(raw_dim_) {}

  std::string kind() const override { return "quadratic"; }
  Eigen::Index input_dim() const override { return raw_dim; }

  Eigen::Index nonzeros() const {
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      if (beta[j] != 0.0) ++k;
    return k;
  }

  Eigen::VectorXd score_rows(const Eigen::MatrixXd& rows) const override {
    Eigen::VectorXd raw = expand_rows(rows, cfg) * beta;
    return raw.unaryExpr([](double v) { return clamp_score(v); });
  }

  nlohmann::json to_json() const override {
    return {{"kind", "quadratic"},
            {"input_dim", raw_dim},
            {"s1", cfg.s1},
            {"k_n", cfg.k_n},
            {"beta", std::vector<double>(beta.data(), beta.data() + beta.size())},
            {"nonzeros", nonzeros()}};
  }
};

struct QuadraticOptions {
  int max_sweeps = 1000;
  double tol = 1e-8;  // converged when max coordinate change per sweep < tol
};

// Minimizes beta' Q beta - 2 lin' beta + lambda ||beta||_1 by cyclic
// coordinate descent. Q must be symmetric positive semidefinite. Exact
// coordinate minimization, so the objective never increases. A zero diagonal
// entry means the feature is identically zero on the data; its coordinate
// stays at 0.
inline Eigen::VectorXd solve_quadratic_lasso(const Eigen::MatrixXd& quad,
                                             const Eigen::VectorXd& lin, double lambda,
                                             const QuadraticOptions& opts = {},
                                             FitDiagnostics* diag = nullptr) {
  const Eigen::Index m = quad.rows();
  require(quad.cols() == m, errc::dimension_mismatch, "quadratic term must be square");
  require(lin.size() == m, errc::dimension_mismatch, "linear term size mismatch");
  require(lambda >= 0.0, errc::dimension_mismatch, "lambda must be nonnegative");
  require(quad.allFinite() && lin.allFinite(), errc::non_finite_loss,
          "non-finite entries in quadratic problem");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd qbeta = Eigen::VectorXd::Zero(m);  // quad * beta, kept incrementally
  bool converged = false;
  int sweeps = 0;
  for (; sweeps < opts.max_sweeps; ++sweeps) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double qjj = quad(j, j);
      if (qjj <= 0.0) continue;
      const double partial = lin[j] - (qbeta[j] - qjj * beta[j]);
      const double updated = detail::soft_threshold(partial, lambda / 2.0) / qjj;
      const double change = updated - beta[j];
      if (change != 0.0) {
        qbeta.noalias() += change * quad.col(j);
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    if (max_change < opts.tol) {
      converged = true;
      ++sweeps;
      break;
    }
  }

  if (diag) {
    diag->converged = converged;
    diag->iterations = sweeps;
    diag->final_objective = beta.dot(qbeta) - 2.0 * lin.dot(beta) + lambda * beta.lpNorm<1>();
    if (!converged) diag->warnings.push_back("NotConverged: coordinate descent hit max_sweeps");
  }
  return beta;
}

// Fits the penalized quadratic classifier from paired training rows: joint
// rows Z_i against their cyclically permuted counterparts Z_i'. With the
// 2n stacked expanded rows Xi, Gamma = Xi'Xi / n and gamma = Xi_Z'1 / n, the
// problem is beta' Gamma beta - 2 gamma' beta + lambda ||beta||_1. Both terms
// are averages, so duplicating every input row leaves the fit unchanged.
inline QuadScoreModel fit_penalized_quadratic(const Eigen::MatrixXd& joint_rows,
                                              const Eigen::MatrixXd& prod_rows,
                                              const BasisConfig& cfg, double lambda,
                                              const QuadraticOptions& opts = {}) {
  require(joint_rows.rows() == prod_rows.rows(), errc::row_count_mismatch,
          "joint and permuted samples must have equal row counts");
  require(joint_rows.cols() == prod_rows.cols(), errc::dimension_mismatch,
          "joint and permuted samples must have equal dimension");
  require(joint_rows.rows() >= 1, errc::empty_input, "empty training sample");

  const double n = static_cast<double>(joint_rows.rows());
  const Eigen::MatrixXd xi_z = expand_rows(joint_rows, cfg);
  const Eigen::MatrixXd xi_p = expand_rows(prod_rows, cfg);

  Eigen::MatrixXd gram = (xi_z.transpose() * xi_z + xi_p.transpose() * xi_p) / n;
  Eigen::VectorXd target = xi_z.colwise().sum().transpose() / n;

  QuadScoreModel model;
  model.cfg = cfg;
  model.raw_dim = joint_rows.cols();
  model.beta = solve_quadratic_lasso(gram, target, lambda, opts, &model.diagnostics);
  return model;
}

}  // namespace cpc
