#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cpc/models.hpp"
#include "cpc/sim.hpp"
#include "cpc/split.hpp"

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

}  // namespace

TEST_CASE("separable data yields a positive weight and perfect training accuracy") {
  const Eigen::Index n = 60;
  Eigen::MatrixXd x(n, 1);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    x(i, 0) = (pos ? 1.0 : -1.0) * (1.0 + static_cast<double>(i) / n);
    y[static_cast<std::size_t>(i)] = pos;
  }
  const cpc::LinearScoreModel m = cpc::fit_logistic_l1(x, y, 1e-4);
  REQUIRE(m.weights()[0] > 0.5);
  REQUIRE(m.diagnostics.converged);
  const Eigen::VectorXd s = m.score_rows(x);
  for (Eigen::Index i = 0; i < n; ++i)
    REQUIRE((s[i] > 0.5) == (y[static_cast<std::size_t>(i)] == 1));
}

TEST_CASE("objective trace never increases") {
  cpc::Rng rng(5);
  Eigen::MatrixXd x(80, 4);
  std::vector<int> y(80);
  for (Eigen::Index i = 0; i < 80; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = rng.normal();
    y[static_cast<std::size_t>(i)] = x(i, 0) + 0.5 * rng.normal() > 0.0;
  }
  const cpc::LinearScoreModel m = cpc::fit_logistic_l1(x, y, 1e-3);
  const auto& trace = m.diagnostics.objective_trace;
  REQUIRE(trace.size() >= 2);
  for (std::size_t k = 1; k < trace.size(); ++k) REQUIRE(trace[k] <= trace[k - 1] + 1e-15);
  REQUIRE(m.diagnostics.final_objective == trace.back());
}

TEST_CASE("heavier l1 penalties only zero out more weights") {
  cpc::Rng rng(6);
  Eigen::MatrixXd x(200, 10);
  std::vector<int> y(200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (Eigen::Index j = 0; j < 10; ++j) x(i, j) = rng.normal();
    y[static_cast<std::size_t>(i)] = x(i, 0) - 0.7 * x(i, 3) + rng.normal() > 0.0;
  }
  Eigen::Index prev = -1;
  for (const double lambda : {1e-3, 1e-2, 5e-2, 1e-1, 3e-1}) {
    const cpc::LinearScoreModel m = cpc::fit_logistic_l1(x, y, lambda);
    REQUIRE(m.zero_weight_count() >= prev);
    prev = m.zero_weight_count();
  }
  REQUIRE(prev == 10);  // at lambda 0.3 nothing survives on this data
}

TEST_CASE("cyclic training tables admit no linear separation at all") {
  // both classes share exact column means, so w = 0 is the global optimum of
  // the penalized objective and the solver must return it bit-exactly
  cpc::SimModel model;
  model.id = cpc::SimModelId::m1;
  model.a = 1.0;
  model.d1 = 3;
  model.d2 = 3;
  const cpc::PairedSample s = cpc::generate(model, 200, 99);
  const cpc::TrainEvalTables t = cpc::build_training_sets(s, cpc::split_indices(s.n(), 99));

  const cpc::LinearScoreModel m = cpc::fit_logistic_l1(t.train_features, t.train_labels, 1e-4);
  REQUIRE(m.weights().norm() == 0.0);
  REQUIRE(m.zero_weight_count() == 6);
  REQUIRE(std::abs(m.intercept()) < 1e-8);

  const Eigen::VectorXd s_joint = m.score_rows(t.eval_joint);
  const Eigen::VectorXd s_prod = m.score_rows(t.eval_prod);
  for (Eigen::Index i = 0; i < s_joint.size(); ++i) {
    REQUIRE(s_joint[i] == s_joint[0]);
    REQUIRE(s_prod[i] == s_joint[0]);
  }
}

TEST_CASE("fits are deterministic") {
  cpc::Rng rng(7);
  Eigen::MatrixXd x(100, 5);
  std::vector<int> y(100);
  for (Eigen::Index i = 0; i < 100; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = rng.normal();
    y[static_cast<std::size_t>(i)] = x(i, 1) > 0.0;
  }
  const cpc::LinearScoreModel a = cpc::fit_logistic_l1(x, y, 1e-3);
  const cpc::LinearScoreModel b = cpc::fit_logistic_l1(x, y, 1e-3);
  REQUIRE(a.weights() == b.weights());
  REQUIRE(a.intercept() == b.intercept());
}

TEST_CASE("degenerate label vectors are rejected") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 2);
  REQUIRE(code_of([&] { cpc::fit_logistic_l1(x, std::vector<int>(10, 1), 0.01); }) ==
          cpc::errc::single_class_input);
  REQUIRE(code_of([&] { cpc::fit_logistic_l1(x, std::vector<int>(9, 1), 0.01); }) ==
          cpc::errc::length_mismatch);
}

TEST_CASE("scores are clamped away from 0 and 1") {
  Eigen::MatrixXd x(4, 1);
  x << -1000.0, -500.0, 500.0, 1000.0;
  const cpc::LinearScoreModel m(Eigen::VectorXd::Ones(1), 0.0);
  const Eigen::VectorXd s = m.score_rows(x);
  REQUIRE(s.minCoeff() == cpc::kScoreClamp);
  REQUIRE(s.maxCoeff() == 1.0 - cpc::kScoreClamp);
}
