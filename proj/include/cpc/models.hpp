#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpc/errors.hpp"

namespace cpc {

// Scores are kept strictly inside (0,1) so downstream logits stay finite.
inline constexpr double kScoreClamp = 1e-7;

inline double clamp_score(double s) {
  if (s < kScoreClamp) return kScoreClamp;
  if (s > 1.0 - kScoreClamp) return 1.0 - kScoreClamp;
  return s;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct FitDiagnostics {
  bool converged = true;
  int iterations = 0;
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> objective_trace;
  std::vector<std::string> warnings;
};

// Class-probability estimate theta_hat(x, y), evaluated on rows holding the
// concatenated (x, y) features. Deterministic once fitted.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual std::string kind() const = 0;
  virtual Eigen::Index input_dim() const = 0;
  virtual Eigen::VectorXd score_rows(const Eigen::MatrixXd& rows) const = 0;
  virtual nlohmann::json to_json() const = 0;

  FitDiagnostics diagnostics;
};

inline Eigen::VectorXd predict_scores(const ScoreModel& model, const Eigen::MatrixXd& rows) {
  require(rows.cols() == model.input_dim(), errc::dimension_mismatch,
          "rows have " + std::to_string(rows.cols()) + " features, model expects " +
              std::to_string(model.input_dim()));
  Eigen::VectorXd s = model.score_rows(rows);
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = clamp_score(s[i]);
  return s;
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Linear logit: theta_hat = sigmoid(w'z + b).
class LinearScoreModel : public ScoreModel {
 public:
  LinearScoreModel(Eigen::VectorXd w, double b) : w_(std::move(w)), b_(b) {}

  std::string kind() const override { return "logistic"; }
  Eigen::Index input_dim() const override { return w_.size(); }

  Eigen::VectorXd score_rows(const Eigen::MatrixXd& rows) const override {
    Eigen::VectorXd z = rows * w_;
    z.array() += b_;
    return z.unaryExpr([](double v) { return clamp_score(sigmoid(v)); });
  }

  const Eigen::VectorXd& weights() const { return w_; }
  double intercept() const { return b_; }

  Eigen::Index zero_weight_count() const {
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < w_.size(); ++j)
      if (w_[j] == 0.0) ++c;
    return c;
  }

  nlohmann::json to_json() const override {
    return {{"kind", "logistic"},
            {"weights", std::vector<double>(w_.data(), w_.data() + w_.size())},
            {"intercept", b_},
            {"zero_weights", zero_weight_count()}};
  }

 private:
  Eigen::VectorXd w_;
  double b_;
};

struct LogisticOptions {
  int max_iter = 500;
  double tol = 1e-9;
  std::uint64_t seed = 0;  // accepted for config parity; the solver is deterministic
};

namespace detail {

inline void check_two_classes(const std::vector<int>& labels) {
  bool has0 = false, has1 = false;
  for (const int l : labels) (l ? has1 : has0) = true;
  require(has0 && has1, errc::single_class_input, "training labels contain a single class");
}

// Mean logistic loss and gradient at (w, b).
inline double logistic_loss_grad(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                 const Eigen::VectorXd& w, double b, Eigen::VectorXd& gw,
                                 double& gb) {
  const Eigen::Index n = x.rows();
  Eigen::VectorXd z = x * w;
  z.array() += b;
  double loss = 0.0;
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = z[i];
    const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
    // log(1 + e^z) - y z, computed stably on both tails.
    loss += (zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi))) - yi * zi;
    r[i] = sigmoid(zi) - yi;
  }
  const double inv = 1.0 / static_cast<double>(n);
  gw.noalias() = x.transpose() * r;
  gw *= inv;
  gb = r.sum() * inv;
  return loss * inv;
}

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace detail

// Proximal gradient (ISTA with backtracking) for
//   mean logistic loss + lambda * ||w||_1,     intercept unpenalized.
// The line search guarantees a non-increasing objective trace.
inline LinearScoreModel fit_logistic_l1(const Eigen::MatrixXd& features,
                                        const std::vector<int>& labels, double lambda,
                                        const LogisticOptions& opts = {}) {
  require(features.rows() == static_cast<Eigen::Index>(labels.size()), errc::length_mismatch,
          "feature rows and label count differ");
  detail::check_two_classes(labels);

  const Eigen::Index d = features.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double pos = 0.0;
  for (const int l : labels) pos += l;
  pos /= static_cast<double>(labels.size());
  pos = std::min(std::max(pos, 1e-12), 1.0 - 1e-12);
  double b = std::log(pos / (1.0 - pos));

  Eigen::VectorXd gw(d), w_new(d);
  double gb = 0.0;
  double g = detail::logistic_loss_grad(features, labels, w, b, gw, gb);
  require(std::isfinite(g), errc::non_finite_loss, "logistic loss is not finite at start");

  double objective = g + lambda * w.lpNorm<1>();
  FitDiagnostics diag;
  diag.objective_trace.push_back(objective);

  double step = 1.0;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    double g_new = 0.0, b_new = 0.0;
    while (true) {
      for (Eigen::Index j = 0; j < d; ++j)
        w_new[j] = detail::soft_threshold(w[j] - step * gw[j], step * lambda);
      b_new = b - step * gb;

      Eigen::VectorXd gw_tmp(d);
      double gb_tmp = 0.0;
      g_new = detail::logistic_loss_grad(features, labels, w_new, b_new, gw_tmp, gb_tmp);
      require(std::isfinite(g_new), errc::non_finite_loss, "logistic loss diverged");

      const Eigen::VectorXd dw = w_new - w;
      const double db = b_new - b;
      const double quad = g + gw.dot(dw) + gb * db + (dw.squaredNorm() + db * db) / (2.0 * step);
      if (g_new <= quad + 1e-15) {
        gw = gw_tmp;
        gb = gb_tmp;
        break;
      }
      step *= 0.5;
      require(step > 1e-18, errc::non_finite_loss, "line search failed");
    }

    w.swap(w_new);
    b = b_new;
    g = g_new;
    const double objective_new = g + lambda * w.lpNorm<1>();
    const double drop = objective - objective_new;
    objective = objective_new;
    diag.objective_trace.push_back(objective);
    if (drop < opts.tol && iter > 0) {
      ++iter;
      break;
    }
    step *= 1.25;  // recover from conservative backtracks
  }

  diag.converged = iter < opts.max_iter;
  diag.iterations = iter;
  diag.final_objective = objective;
  if (!diag.converged) diag.warnings.push_back("NotConverged: max_iter reached");

  LinearScoreModel model(std::move(w), b);
  model.diagnostics = std::move(diag);
  return model;
}

}  // namespace cpc
