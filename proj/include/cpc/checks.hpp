#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cpc/basis.hpp"
#include "cpc/errors.hpp"
#include "cpc/experiments.hpp"
#include "cpc/quadratic.hpp"
#include "cpc/rng.hpp"

namespace cpc {

// A pair of discrete distributions on a shared finite support, with P
// absolutely continuous w.r.t. Q.
struct DiscreteDistPair {
  std::vector<double> p;
  std::vector<double> q;
};

struct TvBound {
  // sum_i |p_i - q_i|: the integrated density difference, under which the
  // sandwich constants 1/4 and 1/2 are exact (half of it is the sup-measure
  // form of the distance).
  double d_tv = 0.0;
  double p_less = 0.0;  // P{r(V) < r(W)} + 1/2 P{r(V) = r(W)}, r = p/q
  double lhs = 0.0;     // d_tv / 4
  double middle = 0.0;  // 1/2 - p_less
  double rhs = 0.0;     // d_tv / 2
  bool pass = false;
};

// Exact enumeration of the sandwich d_tv/4 <= 1/2 - P{r(V) < r(W)} <= d_tv/2
// with V ~ P, W ~ Q and randomized tie-breaking entering as its exact
// expectation (mass 1/2 on equal ratios). With that tie convention the middle
// equals E|r(W) - r(W')|/4 for W, W' iid Q, which Jensen and the triangle
// inequality pin between d_tv/4 and d_tv/2.
inline TvBound tv_bound_check(const DiscreteDistPair& pair) {
  const std::size_t k = pair.p.size();
  require(k == pair.q.size() && k > 0, errc::length_mismatch,
          "supports must be equal and nonempty");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    require(pair.p[i] >= 0.0 && pair.q[i] >= 0.0, errc::parse_error,
            "probabilities must be nonnegative");
    require(pair.q[i] > 0.0 || pair.p[i] == 0.0, errc::absolute_continuity_violated,
            "P puts mass where Q has none");
    sp += pair.p[i];
    sq += pair.q[i];
  }
  require(std::abs(sp - 1.0) < 1e-9 && std::abs(sq - 1.0) < 1e-9, errc::parse_error,
          "probability vectors must sum to 1");

  TvBound out;
  for (std::size_t i = 0; i < k; ++i) out.d_tv += std::abs(pair.p[i] - pair.q[i]);

  // ratios are only compared on the support of Q; V never lands outside it
  for (std::size_t i = 0; i < k; ++i) {
    if (pair.p[i] == 0.0) continue;
    const double ri = pair.p[i] / pair.q[i];
    for (std::size_t j = 0; j < k; ++j) {
      if (pair.q[j] == 0.0) continue;
      const double rj = pair.p[j] / pair.q[j];
      if (ri < rj)
        out.p_less += pair.p[i] * pair.q[j];
      else if (ri == rj)
        out.p_less += 0.5 * pair.p[i] * pair.q[j];
    }
  }

  out.lhs = out.d_tv / 4.0;
  out.middle = 0.5 - out.p_less;
  out.rhs = out.d_tv / 2.0;
  out.pass = out.lhs <= out.middle + 1e-12 && out.middle <= out.rhs + 1e-12;
  return out;
}

struct MuCheckConfig {
  double rho = 5.0;
  std::vector<Eigen::Index> n_grid{100, 1000, 10000};
  double reps_scale = 1.0;  // scales the per-n pair budget
  std::uint64_t master_seed = 42;
  int jobs = 1;
};

struct MuRow {
  Eigen::Index n = 0;
  double value = 0.0;  // sqrt(n2) * (mu_star_hat - mu_hat)
  double mu_hat = 0.0;
  double mu_star_hat = 0.0;
  long long pairs = 0;
};

namespace detail {

// Per-n Monte Carlo budget: the target shrinks like n^{-1/2}, so later grid
// points need far more pairs for a resolvable trend.
inline long long mu_check_budget(Eigen::Index n, double scale) {
  const double raw = 2e7 * (static_cast<double>(n) / 100.0);
  return std::max<long long>(10000, static_cast<long long>(std::min(raw, 6e8) * scale));
}

struct MuAccumulator {
  long double sum_g = 0.0;
  long double sum_h = 0.0;
};

// One Monte Carlo chunk for the bivariate-normal ordering check (see
// mu_condition_check below). For each pair, H is the exact ordering indicator
// under the true correlation c, and G integrates the same event over the
// normal approximation of the estimated correlation's law, conditional on the
// pair. Both use tie mass 1/2, which only matters at c = 0.
inline MuAccumulator mu_check_chunk(double c, double est_mean, double est_sd,
                                    long long pairs, std::uint64_t seed) {
  Rng rng(seed);
  MuAccumulator acc;
  const double p_pos = 1.0 - normal_cdf((0.0 - est_mean) / est_sd);  // P{c_hat > 0}
  for (long long it = 0; it < pairs; ++it) {
    const double z1 = rng.normal(), z2 = rng.normal();
    const double u1 = rng.normal(), u2 = rng.normal();
    const double xv = z1;
    const double yv = c * z1 + std::sqrt(1.0 - c * c) * z2;
    const double a = xv * yv - u1 * u2;
    const double b = 0.5 * (xv * xv + yv * yv - u1 * u1 - u2 * u2);

    // H: ordering of the exact density-ratio statistic v_c = xy - (c/2)(x^2+y^2)
    double h;
    if (c > 0.0) {
      const double diff = a - c * b;
      h = diff < 0.0 ? 1.0 : (diff == 0.0 ? 0.5 : 0.0);
    } else if (c < 0.0) {
      const double diff = a - c * b;
      h = diff > 0.0 ? 1.0 : (diff == 0.0 ? 0.5 : 0.0);
    } else {
      h = 0.5;
    }

    // G: P{ordering holds under c_hat ~ N(est_mean, est_sd^2)} given the pair.
    // The event {v_t(V) < v_t(W)} is {a - t b < 0} for t > 0 and
    // {a - t b > 0} for t < 0.
    double g;
    if (b > 0.0) {
      const double t_star = a / b;
      const double hi = std::max(0.0, t_star);
      const double lo = std::min(0.0, t_star);
      g = (1.0 - normal_cdf((hi - est_mean) / est_sd)) +
          normal_cdf((lo - est_mean) / est_sd);
    } else if (b < 0.0) {
      const double t_star = a / b;
      if (t_star > 0.0)
        g = normal_cdf((t_star - est_mean) / est_sd) - (1.0 - p_pos);
      else if (t_star < 0.0)
        g = (1.0 - p_pos) - normal_cdf((t_star - est_mean) / est_sd);
      else
        g = 0.0;
    } else {
      g = a < 0.0 ? p_pos : (a > 0.0 ? 1.0 - p_pos : 0.5);
    }

    acc.sum_g += g;
    acc.sum_h += h;
  }
  return acc;
}

}  // namespace detail

// Numerical check that the estimated-classifier ordering probability
// converges to the oracle one faster than n2^{-1/2}, on the closed-form
// bivariate-normal example: the joint law has correlation c = rho/sqrt(n),
// the comparison draw is independent N(0, I2), and the density-ratio order
// statistic is v_t(x,y) = xy - (t/2)(x^2+y^2), increasing in the ratio for
// t > 0 and decreasing for t < 0.
//
// The estimated correlation is c_hat = rho_hat/sqrt(n) with
// rho_hat = n1^{-1/2} sum_{i<=n1} X_i Y_i over the training half. Instead of
// nesting a second simulation for rho_hat, each evaluation pair integrates
// the ordering event over the CLT law c_hat ~ N(c sqrt(n1/n), (1+c^2)/n)
// in closed form, which collapses the variance enough to resolve the
// n = 10000 grid point on a desk budget.
inline std::vector<MuRow> mu_condition_check(const MuCheckConfig& cfg) {
  require(!cfg.n_grid.empty(), errc::empty_input, "empty n grid");
  std::vector<MuRow> rows;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const Eigen::Index n = cfg.n_grid[ni];
    require(n >= 4, errc::sample_too_small, "n must be >= 4");
    const auto n1 = static_cast<double>((n + 1) / 2);
    const auto n2 = static_cast<double>(n) - n1;
    const double c = cfg.rho / std::sqrt(static_cast<double>(n));
    require(std::abs(c) < 1.0, errc::invalid_model, "rho/sqrt(n) must be below 1");
    const double est_mean = c * std::sqrt(n1 / static_cast<double>(n));
    const double est_sd = std::sqrt((1.0 + c * c) / static_cast<double>(n));

    const long long budget = detail::mu_check_budget(n, cfg.reps_scale);
    const long long chunk = 4'000'000;
    const auto chunks = static_cast<std::size_t>((budget + chunk - 1) / chunk);
    std::vector<detail::MuAccumulator> parts(chunks);
    std::vector<long long> sizes(chunks);
    detail::run_jobs(cfg.jobs, chunks, [&](std::size_t k) {
      const long long lo = static_cast<long long>(k) * chunk;
      sizes[k] = std::min(chunk, budget - lo);
      parts[k] = detail::mu_check_chunk(
          c, est_mean, est_sd, sizes[k],
          derive_seed(cfg.master_seed, static_cast<std::uint64_t>(ni),
                      static_cast<std::uint64_t>(k)));
    });

    long double sum_g = 0.0, sum_h = 0.0;
    for (const auto& part : parts) {
      sum_g += part.sum_g;
      sum_h += part.sum_h;
    }
    MuRow row;
    row.n = n;
    row.pairs = budget;
    row.mu_hat = static_cast<double>(sum_h / budget);
    row.mu_star_hat = static_cast<double>(sum_g / budget);
    row.value = std::sqrt(n2) * (row.mu_star_hat - row.mu_hat);
    rows.push_back(row);
  }
  return rows;
}

struct LassoRateConfig {
  Eigen::Index d = 20;
  int s1 = 1;
  int s2 = 3;
  int k_n = 3;
  std::vector<Eigen::Index> n_grid{250, 500, 1000, 2000};
  int reps = 20;
  double c_lambda = 2.0;  // lambda = c_lambda * sqrt(log(m)/n)
  std::uint64_t master_seed = 42;
  int jobs = 1;
};

struct LassoInstance {
  Eigen::MatrixXd xi;        // n x m expanded design, columns scaled to unit rms
  Eigen::VectorXd y;         // xi * beta_star + N(0,1) noise
  Eigen::VectorXd beta_star;
};

// Draw order: support coordinates (rejection sampling for distinctness),
// signs, the n x d Gaussian design row-major, then the n noise draws.
// Expanded columns are divided by their population rms so one penalty level
// is commensurate across every basis feature.
inline LassoInstance make_lasso_instance(Eigen::Index d, int s1, int s2, int k_n,
                                         Eigen::Index n, std::uint64_t seed) {
  BasisConfig cfg{s1, k_n, BasisConfig{}.max_features};
  const auto m = static_cast<Eigen::Index>(basis_dim(d, cfg));
  require(s2 >= 0 && static_cast<Eigen::Index>(s2) <= m, errc::dimension_mismatch,
          "s2 must be between 0 and m");
  Rng rng(seed);

  LassoInstance inst;
  inst.beta_star = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::Index> support;
  while (support.size() < static_cast<std::size_t>(s2)) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m)));
    if (std::find(support.begin(), support.end(), j) == support.end()) support.push_back(j);
  }
  for (Eigen::Index j : support) inst.beta_star[j] = rng.below(2) == 0 ? 1.0 : -1.0;

  Eigen::MatrixXd z(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  inst.xi = expand_rows(z, cfg);
  inst.xi.array().rowwise() /= basis_rms_normal(d, cfg).transpose().array();
  inst.y = inst.xi * inst.beta_star;
  for (Eigen::Index i = 0; i < n; ++i) inst.y[i] += rng.normal();
  return inst;
}

struct LassoRateRow {
  Eigen::Index n = 0;
  double median_error = 0.0;  // ||beta_hat - beta_star||_2
  double lambda = 0.0;
  int reps = 0;
};

struct LassoRateResult {
  std::vector<LassoRateRow> rows;
  double slope = 0.0;  // least-squares slope of log(median_error) on log(n)
};

// Estimation-error scaling of the quadratic-lasso solver on planted sparse
// ground truth; the n^{-1/2} theory predicts slope -1/2 on the log-log grid.
// Reps are paired across the grid: each rep draws one instance at the
// largest n and solves nested prefixes, so its error curve tracks one fixed
// planted truth and the slope is not polluted by instance-difficulty spread.
inline LassoRateResult lasso_rate_experiment(const LassoRateConfig& cfg) {
  require(cfg.n_grid.size() >= 2, errc::empty_input, "need at least two grid points");
  require(cfg.reps >= 1, errc::empty_input, "reps must be >= 1");
  for (Eigen::Index n : cfg.n_grid)
    require(n >= 2, errc::sample_too_small, "every grid n must be >= 2");

  BasisConfig bc{cfg.s1, cfg.k_n, BasisConfig{}.max_features};
  const double m = static_cast<double>(basis_dim(cfg.d, bc));
  const Eigen::Index n_max = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());

  std::vector<std::vector<double>> errors(
      cfg.n_grid.size(), std::vector<double>(static_cast<std::size_t>(cfg.reps)));
  detail::run_jobs(cfg.jobs, static_cast<std::size_t>(cfg.reps), [&](std::size_t rep) {
    const LassoInstance inst =
        make_lasso_instance(cfg.d, cfg.s1, cfg.s2, cfg.k_n, n_max,
                            derive_seed(cfg.master_seed, static_cast<std::uint64_t>(rep)));
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
      const Eigen::Index n = cfg.n_grid[ni];
      const double scale = static_cast<double>(n);
      const auto xi = inst.xi.topRows(n);
      const Eigen::MatrixXd gram = xi.transpose() * xi / scale;
      const Eigen::VectorXd target = xi.transpose() * inst.y.head(n) / scale;
      const double lambda = cfg.c_lambda * std::sqrt(std::log(m) / scale);
      const Eigen::VectorXd beta = solve_quadratic_lasso(gram, target, lambda);
      errors[ni][rep] = (beta - inst.beta_star).norm();
    }
  });

  LassoRateResult out;
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    std::vector<double>& errs = errors[ni];
    std::sort(errs.begin(), errs.end());
    const std::size_t mid = errs.size() / 2;
    LassoRateRow row;
    row.n = cfg.n_grid[ni];
    row.lambda = cfg.c_lambda * std::sqrt(std::log(m) / static_cast<double>(row.n));
    row.reps = cfg.reps;
    row.median_error =
        errs.size() % 2 == 1 ? errs[mid] : 0.5 * (errs[mid - 1] + errs[mid]);
    out.rows.push_back(row);
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double cnt = static_cast<double>(out.rows.size());
  for (const auto& row : out.rows) {
    const double lx = std::log(static_cast<double>(row.n));
    const double ly = std::log(std::max(row.median_error, 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  out.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return out;
}

}  // namespace cpc
