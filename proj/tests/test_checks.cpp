#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cpc/checks.hpp"
#include "cpc/rng.hpp"

namespace {

template <typename Fn>
cpc::errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const cpc::error& e) {
    return e.code();
  }
  FAIL("expected a cpc::error");
  return cpc::errc::parse_error;
}

// E|r(W) - r(W')| / 4 over W, W' iid Q: the alternative closed form of the
// sandwiched quantity.
double ratio_gap_quarter(const cpc::DiscreteDistPair& pair) {
  double s = 0.0;
  for (std::size_t j = 0; j < pair.q.size(); ++j) {
    if (pair.q[j] == 0.0) continue;
    for (std::size_t k = 0; k < pair.q.size(); ++k) {
      if (pair.q[k] == 0.0) continue;
      s += pair.q[j] * pair.q[k] *
           std::abs(pair.p[j] / pair.q[j] - pair.p[k] / pair.q[k]);
    }
  }
  return s / 4.0;
}

}  // namespace

TEST_CASE("tv sandwich on point mass versus fair coin") {
  const cpc::TvBound b = cpc::tv_bound_check({{1.0, 0.0}, {0.5, 0.5}});
  REQUIRE(b.d_tv == 1.0);
  REQUIRE(b.p_less == 0.25);
  REQUIRE(b.lhs == 0.25);
  REQUIRE(b.middle == 0.25);  // lower bound is tight here
  REQUIRE(b.rhs == 0.5);
  REQUIRE(b.pass);
}

TEST_CASE("tv sandwich on a tilted coin") {
  const cpc::TvBound b = cpc::tv_bound_check({{0.75, 0.25}, {0.5, 0.5}});
  REQUIRE(b.d_tv == 0.5);
  REQUIRE(b.p_less == 0.375);
  REQUIRE(b.lhs == 0.125);
  REQUIRE(b.middle == 0.125);
  REQUIRE(b.rhs == 0.25);
  REQUIRE(b.pass);
}

TEST_CASE("identical distributions collapse the sandwich to zero") {
  const cpc::TvBound b = cpc::tv_bound_check({{0.3, 0.7}, {0.3, 0.7}});
  REQUIRE(b.d_tv == 0.0);
  REQUIRE(b.p_less == 0.5);
  REQUIRE(b.middle == 0.0);
  REQUIRE(b.pass);
}

TEST_CASE("fuzzed distribution pairs always satisfy the sandwich") {
  cpc::Rng rng(83);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t k = 1 + rng.below(8);
    cpc::DiscreteDistPair pair;
    pair.p.resize(k);
    pair.q.resize(k);
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      pair.q[i] = 0.05 + rng.uniform01();  // bounded away from zero
      pair.p[i] = rng.below(4) == 0 ? 0.0 : rng.uniform01();
      sp += pair.p[i];
      sq += pair.q[i];
    }
    if (sp == 0.0) {
      pair.p[0] = 1.0;
      sp = 1.0;
    }
    for (std::size_t i = 0; i < k; ++i) {
      pair.p[i] /= sp;
      pair.q[i] /= sq;
    }

    const cpc::TvBound b = cpc::tv_bound_check(pair);
    REQUIRE(b.pass);
    REQUIRE(b.lhs <= b.middle + 1e-12);
    REQUIRE(b.middle <= b.rhs + 1e-12);

    double d_tv = 0.0;
    for (std::size_t i = 0; i < k; ++i) d_tv += std::abs(pair.p[i] - pair.q[i]);
    REQUIRE(b.d_tv == d_tv);

    // the randomized-tie middle equals the mean absolute ratio gap over Q
    REQUIRE(std::abs(b.middle - ratio_gap_quarter(pair)) < 1e-12);
  }
}

TEST_CASE("tv check rejects malformed distribution pairs") {
  REQUIRE(code_of([] { cpc::tv_bound_check({{0.5, 0.5}, {1.0, 0.0}}); }) ==
          cpc::errc::absolute_continuity_violated);
  REQUIRE(code_of([] { cpc::tv_bound_check({{0.6, 0.6}, {0.5, 0.5}}); }) ==
          cpc::errc::parse_error);
  REQUIRE(code_of([] { cpc::tv_bound_check({{1.0}, {0.5, 0.5}}); }) ==
          cpc::errc::length_mismatch);
  REQUIRE(code_of([] { cpc::tv_bound_check({{}, {}}); }) == cpc::errc::length_mismatch);
  REQUIRE(code_of([] { cpc::tv_bound_check({{-0.5, 1.5}, {0.5, 0.5}}); }) ==
          cpc::errc::parse_error);
}

TEST_CASE("ordering probabilities coincide under exact independence") {
  cpc::MuCheckConfig cfg;
  cfg.rho = 0.0;
  cfg.n_grid = {100};
  cfg.reps_scale = 0.2;
  const std::vector<cpc::MuRow> rows = cpc::mu_condition_check(cfg);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].n == 100);
  REQUIRE(rows[0].pairs == 4000000);
  REQUIRE(rows[0].mu_hat == 0.5);  // the tie convention is exact at rho = 0
  REQUIRE(std::abs(rows[0].value) < 0.01);

  const std::vector<cpc::MuRow> again = cpc::mu_condition_check(cfg);
  REQUIRE(rows[0].value == again[0].value);
}

TEST_CASE("estimation noise inflates the ordering probability under signal") {
  cpc::MuCheckConfig cfg;
  cfg.rho = 5.0;
  cfg.n_grid = {100};
  cfg.reps_scale = 0.2;
  const std::vector<cpc::MuRow> rows = cpc::mu_condition_check(cfg);
  REQUIRE(rows[0].mu_star_hat > rows[0].mu_hat);
  REQUIRE(rows[0].value > 0.0);
}

TEST_CASE("mu check rejects unusable grids") {
  cpc::MuCheckConfig cfg;
  cfg.n_grid = {};
  REQUIRE(code_of([&] { cpc::mu_condition_check(cfg); }) == cpc::errc::empty_input);
  cfg.n_grid = {3};
  REQUIRE(code_of([&] { cpc::mu_condition_check(cfg); }) == cpc::errc::sample_too_small);
  cfg.rho = 20.0;  // correlation 2.0 at n = 100
  cfg.n_grid = {100};
  REQUIRE(code_of([&] { cpc::mu_condition_check(cfg); }) == cpc::errc::invalid_model);
}

TEST_CASE("planted lasso instances have the advertised structure") {
  const cpc::LassoInstance inst = cpc::make_lasso_instance(4, 1, 3, 3, 500, 7);
  REQUIRE(inst.xi.rows() == 500);
  REQUIRE(inst.xi.cols() == 12);  // C(4,1) * 3 exponents
  REQUIRE(inst.beta_star.size() == 12);

  int nnz = 0;
  for (Eigen::Index j = 0; j < 12; ++j)
    if (inst.beta_star[j] != 0.0) {
      ++nnz;
      REQUIRE(std::abs(inst.beta_star[j]) == 1.0);
    }
  REQUIRE(nnz == 3);

  // rms normalization keeps every expanded column near unit scale
  for (Eigen::Index j = 0; j < 12; ++j) {
    const double rms = std::sqrt(inst.xi.col(j).squaredNorm() / 500.0);
    REQUIRE(rms > 0.6);
    REQUIRE(rms < 1.4);
    if (j % 3 == 0) {  // the degree-1 column of each coordinate
      REQUIRE(rms > 0.9);
      REQUIRE(rms < 1.1);
    }
  }

  const Eigen::VectorXd resid = inst.y - inst.xi * inst.beta_star;
  REQUIRE(std::abs(resid.mean()) < 0.2);
  const double var = (resid.array() - resid.mean()).square().sum() / 499.0;
  REQUIRE(var > 0.7);
  REQUIRE(var < 1.3);

  const cpc::LassoInstance again = cpc::make_lasso_instance(4, 1, 3, 3, 500, 7);
  REQUIRE(inst.xi == again.xi);
  REQUIRE(inst.beta_star == again.beta_star);

  REQUIRE(code_of([] { cpc::make_lasso_instance(4, 1, 13, 3, 50, 1); }) ==
          cpc::errc::dimension_mismatch);
}

TEST_CASE("growing the penalty shrinks the active set down to empty") {
  const cpc::LassoInstance inst = cpc::make_lasso_instance(6, 1, 3, 2, 300, 11);
  const Eigen::MatrixXd gram = inst.xi.transpose() * inst.xi / 300.0;
  const Eigen::VectorXd target = inst.xi.transpose() * inst.y / 300.0;
  auto nnz_at = [&](double lambda) {
    const Eigen::VectorXd b = cpc::solve_quadratic_lasso(gram, target, lambda);
    int nnz = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j)
      if (b[j] != 0.0) ++nnz;
    return nnz;
  };
  const int loose = nnz_at(0.02), mid = nnz_at(0.2), tight = nnz_at(2.0);
  REQUIRE(loose >= mid);
  REQUIRE(mid >= tight);
  REQUIRE(mid == 3);  // the moderate penalty recovers exactly the planted support
  REQUIRE(tight == 0);
}

TEST_CASE("estimation error decays with n at roughly the root-n rate") {
  cpc::LassoRateConfig cfg;
  cfg.d = 6;
  cfg.s1 = 1;
  cfg.k_n = 2;
  cfg.s2 = 2;
  cfg.n_grid = {100, 400};
  cfg.reps = 5;
  const cpc::LassoRateResult res = cpc::lasso_rate_experiment(cfg);
  REQUIRE(res.rows.size() == 2);
  for (const auto& row : res.rows) {
    REQUIRE(row.reps == 5);
    REQUIRE(row.median_error > 0.0);
    const double m = 12.0;
    REQUIRE(row.lambda ==
            cfg.c_lambda * std::sqrt(std::log(m) / static_cast<double>(row.n)));
  }
  REQUIRE(res.rows[1].median_error < res.rows[0].median_error);
  REQUIRE(res.slope < -0.2);
  REQUIRE(res.slope > -0.8);
}

TEST_CASE("with nothing planted the penalty suppresses everything") {
  cpc::LassoRateConfig cfg;
  cfg.d = 6;
  cfg.s1 = 1;
  cfg.k_n = 2;
  cfg.s2 = 0;
  cfg.n_grid = {500, 1000};
  cfg.reps = 5;
  const cpc::LassoRateResult res = cpc::lasso_rate_experiment(cfg);
  REQUIRE(res.rows[0].median_error < 0.05);
  REQUIRE(res.rows[1].median_error < 0.05);
}

TEST_CASE("rate experiment rejects degenerate configurations") {
  cpc::LassoRateConfig cfg;
  cfg.n_grid = {250};
  REQUIRE(code_of([&] { cpc::lasso_rate_experiment(cfg); }) == cpc::errc::empty_input);
  cfg.n_grid = {250, 500};
  cfg.reps = 0;
  REQUIRE(code_of([&] { cpc::lasso_rate_experiment(cfg); }) == cpc::errc::empty_input);
  cfg.reps = 1;
  cfg.n_grid = {1, 500};
  REQUIRE(code_of([&] { cpc::lasso_rate_experiment(cfg); }) == cpc::errc::sample_too_small);
}
