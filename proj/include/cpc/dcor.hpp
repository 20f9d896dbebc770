#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpc/errors.hpp"
#include "cpc/rng.hpp"

namespace cpc {

struct DcorResult {
  double dcov_sq = 0.0;
  double dcor = 0.0;
  std::optional<double> p_value;

  nlohmann::json to_json() const {
    nlohmann::json j{{"dcov_sq", dcov_sq}, {"dcor", dcor}};
    if (p_value) j["p_value"] = *p_value;
    return j;
  }
};

namespace detail {

// Double-centered Euclidean distance matrix (V-statistic form).
inline Eigen::MatrixXd centered_distances(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (rows.row(i) - rows.row(j)).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  const Eigen::VectorXd row_mean = d.rowwise().mean();
  const double grand = row_mean.mean();
  d.colwise() -= row_mean;
  d.rowwise() -= row_mean.transpose();
  d.array() += grand;
  return d;
}

inline double mean_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return std::max(0.0, (a.array() * b.array()).mean());
}

}  // namespace detail

// Sample distance correlation in the classical (biased, V-statistic) form:
// dcov^2 = mean(A o B) over double-centered distance matrices, and
// dcor = dcov / sqrt(dcov_X * dcov_Y), defined as 0 when either marginal
// distance covariance vanishes (constant sample).
inline DcorResult distance_correlation(const Eigen::MatrixXd& x_rows,
                                       const Eigen::MatrixXd& y_rows) {
  require(x_rows.rows() == y_rows.rows(), errc::length_mismatch,
          "x and y must have equal row counts");
  require(x_rows.rows() >= 2, errc::sample_too_small, "need at least 2 rows");

  const Eigen::MatrixXd a = detail::centered_distances(x_rows);
  const Eigen::MatrixXd b = detail::centered_distances(y_rows);

  DcorResult out;
  out.dcov_sq = detail::mean_product(a, b);
  const double vx = detail::mean_product(a, a);
  const double vy = detail::mean_product(b, b);
  if (vx > 0.0 && vy > 0.0)
    out.dcor = std::sqrt(out.dcov_sq / std::sqrt(vx * vy));
  return out;
}

// Generic permutation calibration: p = (1 + #{stat(x, pi_b(y)) >= observed})
// / (B + 1), with pi_b seeded uniform row permutations of y.
inline double permutation_pvalue(
    const std::function<double(const Eigen::MatrixXd&, const Eigen::MatrixXd&)>& stat,
    const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& y_rows, int b_count,
    std::uint64_t seed) {
  require(b_count >= 1, errc::empty_input, "need at least one permutation");
  const double observed = stat(x_rows, y_rows);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(y_rows.rows()));
  Eigen::MatrixXd shuffled(y_rows.rows(), y_rows.cols());
  int exceed = 0;
  for (int b = 0; b < b_count; ++b) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b) + 1));
    rng.shuffle(perm);
    for (Eigen::Index i = 0; i < y_rows.rows(); ++i)
      shuffled.row(i) = y_rows.row(perm[static_cast<std::size_t>(i)]);
    if (stat(x_rows, shuffled) >= observed) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(b_count + 1);
}

// dcor with its permutation p-value. Permuting y rows permutes the centered
// matrix B symmetrically, so each replicate reuses the precomputed A and B;
// dcor and dcov^2 rank replicates identically because the denominators are
// permutation-invariant.
inline DcorResult dcor_test(const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& y_rows,
                            int b_count = 200, std::uint64_t seed = 42) {
  require(b_count >= 1, errc::empty_input, "need at least one permutation");
  DcorResult out = distance_correlation(x_rows, y_rows);

  const Eigen::MatrixXd a = detail::centered_distances(x_rows);
  const Eigen::MatrixXd b = detail::centered_distances(y_rows);
  const Eigen::Index n = x_rows.rows();
  const double observed = out.dcov_sq;

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  int exceed = 0;
  for (int rep = 0; rep < b_count; ++rep) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep) + 1));
    rng.shuffle(perm);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index pi = perm[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < n; ++j)
        acc += a(i, j) * b(pi, perm[static_cast<std::size_t>(j)]);
    }
    if (std::max(0.0, acc / static_cast<double>(n * n)) >= observed) ++exceed;
  }
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(b_count + 1);
  return out;
}

}  // namespace cpc
