#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "cpc/data.hpp"
#include "cpc/errors.hpp"
#include "cpc/rng.hpp"

namespace cpc {

// Six generative recipes sharing one shape: X has d1 ambient coordinates,
// Y has d2, and only (X_1, Y_1) are related, via Y_1 = a*g(X_1) + eps with
// eps ~ N(0,1). a = 0 short-circuits to Y_1 = eps so every recipe degenerates
// to exact independence.
enum class SimModelId { m1 = 1, m2, m3, m4, m5, m6 };

inline SimModelId parse_model_id(const std::string& s) {
  if (s.size() == 2 && (s[0] == 'M' || s[0] == 'm') && s[1] >= '1' && s[1] <= '6')
    return static_cast<SimModelId>(s[1] - '0');
  fail(errc::invalid_model, "unknown model id '" + s + "' (expected M1..M6)");
}

inline std::string model_name(SimModelId id) {
  return "M" + std::to_string(static_cast<int>(id));
}

struct SimModel {
  SimModelId id = SimModelId::m1;
  double a = 0.0;
  Eigen::Index d1 = 1;
  Eigen::Index d2 = 1;
  // "ar1" correlates the X block, Sigma_ij = rho^|i-j|; Y noise stays iid.
  std::string cov = "identity";
  double rho = 0.0;
  // "student_t2" makes the X block and the Y noise block independent
  // multivariate t (2 df) via a Gaussian scale mixture, each with ar1(tail_rho)
  // scale. Requires cov == "identity"; eps stays N(0,1).
  std::string tail = "gaussian";
  double tail_rho = 0.0;
};

namespace detail {

inline double signal_term(SimModelId id, double x1, double m4_draw) {
  switch (id) {
    case SimModelId::m1:
      return x1;
    case SimModelId::m2:
      return std::sin(x1);
    case SimModelId::m3:
      return std::exp(x1);
    case SimModelId::m4:
      // the mixture component: N(1,1) below zero, N(-1,1) above, zero at zero
      return x1 == 0.0 ? 0.0 : (x1 < 0.0 ? 1.0 : -1.0) + m4_draw;
    case SimModelId::m5:
      return std::log(4.0 * x1 * x1);
    case SimModelId::m6:
      return 5.0 * std::sqrt(std::abs(x1));
  }
  fail(errc::invalid_model, "unknown model id");
}

// In-place AR(1) pass: x_1 = z_1, x_j = rho*x_{j-1} + sqrt(1-rho^2)*z_j keeps
// N(0,1) marginals with corr(x_i, x_j) = rho^|i-j|.
inline void ar1_in_place(double* row, Eigen::Index len, double rho) {
  if (rho == 0.0 || len <= 1) return;
  const double s = std::sqrt(1.0 - rho * rho);
  for (Eigen::Index j = 1; j < len; ++j) row[j] = rho * row[j - 1] + s * row[j];
}

}  // namespace detail

// Draw order per row (fixed, part of the reproducibility contract): X normals,
// X tail divisor if heavy, Y noise normals, Y tail divisor if heavy and
// d2 > 1, then the M4 mixture normal (M4 only), then eps.
inline PairedSample generate(const SimModel& model, Eigen::Index n, std::uint64_t seed) {
  require(model.d1 >= 1 && model.d2 >= 1, errc::invalid_model, "d1 and d2 must be >= 1");
  require(model.a >= 0.0, errc::invalid_model, "signal strength a must be >= 0");
  require(model.cov == "identity" || model.cov == "ar1", errc::invalid_model,
          "covariance kind must be identity or ar1");
  require(model.tail == "gaussian" || model.tail == "student_t2", errc::invalid_model,
          "tail kind must be gaussian or student_t2");
  const bool heavy = model.tail == "student_t2";
  require(!heavy || model.cov == "identity", errc::invalid_model,
          "student_t2 tails carry their own ar1 scale; set cov=identity");
  const double rho = heavy ? model.tail_rho : model.rho;
  require(std::abs(rho) < 1.0, errc::invalid_model, "ar1 rho must satisfy |rho| < 1");

  Rng rng(seed);
  Eigen::MatrixXd x(n, model.d1), y(n, model.d2);
  std::vector<double> xrow(static_cast<std::size_t>(model.d1));
  std::vector<double> yrow(static_cast<std::size_t>(model.d2));

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < model.d1; ++j) xrow[static_cast<std::size_t>(j)] = rng.normal();
    detail::ar1_in_place(xrow.data(), model.d1, rho);
    if (heavy) {
      const double div = std::sqrt(rng.exponential());  // chisq(2)/2 is Exp(1)
      for (Eigen::Index j = 0; j < model.d1; ++j) xrow[static_cast<std::size_t>(j)] /= div;
    }
    for (Eigen::Index j = 0; j < model.d1; ++j) x(i, j) = xrow[static_cast<std::size_t>(j)];

    for (Eigen::Index j = 1; j < model.d2; ++j) yrow[static_cast<std::size_t>(j)] = rng.normal();
    if (model.d2 > 1) {
      detail::ar1_in_place(yrow.data() + 1, model.d2 - 1, heavy ? rho : 0.0);
      if (heavy) {
        const double div = std::sqrt(rng.exponential());
        for (Eigen::Index j = 1; j < model.d2; ++j) yrow[static_cast<std::size_t>(j)] /= div;
      }
    }

    const double m4_draw = model.id == SimModelId::m4 ? rng.normal() : 0.0;
    const double eps = rng.normal();
    yrow[0] = model.a == 0.0
                  ? eps
                  : model.a * detail::signal_term(model.id, x(i, 0), m4_draw) + eps;
    for (Eigen::Index j = 0; j < model.d2; ++j) y(i, j) = yrow[static_cast<std::size_t>(j)];
  }
  return PairedSample(std::move(x), std::move(y));
}

}  // namespace cpc
