#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cpc/mlp.hpp"

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

struct Xor {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Xor xor_data(Eigen::Index n, std::uint64_t seed) {
  cpc::Rng rng(seed);
  Xor d;
  d.x.resize(n, 2);
  d.y.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    d.x(i, 0) = rng.normal();
    d.x(i, 1) = rng.normal();
    d.y[static_cast<std::size_t>(i)] = (d.x(i, 0) > 0) != (d.x(i, 1) > 0);
  }
  return d;
}

}  // namespace

TEST_CASE("mlp_init is seeded Glorot uniform with zero biases") {
  const cpc::MlpScoreModel a = cpc::mlp_init(4, 3, 11);
  const cpc::MlpScoreModel b = cpc::mlp_init(4, 3, 11);
  REQUIRE(a.w1 == b.w1);
  REQUIRE(a.w2 == b.w2);
  REQUIRE((a.b1.array() == 0.0).all());
  REQUIRE(a.b2 == 0.0);
  REQUIRE(a.w1.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 7.0));
  REQUIRE(a.w2.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 4.0));
  REQUIRE(cpc::mlp_init(4, 3, 12).w1 != a.w1);
}

TEST_CASE("analytic gradient matches central finite differences") {
  const Xor d = xor_data(100, 3);
  const double l1 = 1e-4;
  const double h = 1e-6;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    cpc::MlpScoreModel m = cpc::mlp_init(2, 1, 100 + trial);
    cpc::Rng rng(200 + trial);
    m.b1[0] = rng.normal() * 0.5;
    m.w2[0] = rng.normal();
    m.b2 = rng.normal() * 0.5;

    const cpc::MlpGradient g = cpc::mlp_loss_gradient(m, d.x, d.y, l1);
    double* params[5] = {&m.w1(0, 0), &m.w1(0, 1), &m.b1[0], &m.w2[0], &m.b2};
    const double analytic[5] = {g.g_w1(0, 0), g.g_w1(0, 1), g.g_b1[0], g.g_w2[0], g.g_b2};

    double num = 0.0, den = 0.0;
    for (int k = 0; k < 5; ++k) {
      const double keep = *params[k];
      *params[k] = keep + h;
      const double up = cpc::mlp_loss_gradient(m, d.x, d.y, l1).loss;
      *params[k] = keep - h;
      const double down = cpc::mlp_loss_gradient(m, d.x, d.y, l1).loss;
      *params[k] = keep;
      const double fd = (up - down) / (2.0 * h);
      num += (fd - analytic[k]) * (fd - analytic[k]);
      den += analytic[k] * analytic[k];
    }
    REQUIRE(std::sqrt(num) < 1e-4 * std::max(1.0, std::sqrt(den)));
  }
}

TEST_CASE("zero epochs returns the initialization untouched") {
  const Xor d = xor_data(64, 4);
  cpc::MlpOptions opts;
  opts.epochs = 0;
  opts.seed = 9;
  const cpc::MlpScoreModel m = cpc::fit_mlp(d.x, d.y, 5, opts);
  const cpc::MlpScoreModel init = cpc::mlp_init(2, 5, cpc::derive_seed(9, 1));
  REQUIRE(m.w1 == init.w1);
  REQUIRE(m.b1 == init.b1);
  REQUIRE(m.w2 == init.w2);
  REQUIRE(m.b2 == init.b2);
}

TEST_CASE("a small net learns xor") {
  const Xor d = xor_data(400, 3);
  cpc::MlpOptions opts;
  opts.epochs = 200;
  opts.seed = 11;
  const cpc::MlpScoreModel m = cpc::fit_mlp(d.x, d.y, 8, opts);
  const Eigen::VectorXd s = m.score_rows(d.x);
  int correct = 0;
  for (Eigen::Index i = 0; i < 400; ++i)
    correct += (s[i] > 0.5) == (d.y[static_cast<std::size_t>(i)] == 1);
  REQUIRE(correct >= 360);  // no linear rule can beat ~50% here

  const auto& trace = m.diagnostics.objective_trace;
  REQUIRE(trace.size() == 200);
  REQUIRE(trace.back() < trace.front());
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const Xor d = xor_data(96, 8);
  cpc::MlpOptions opts;
  opts.epochs = 5;
  opts.seed = 21;
  const cpc::MlpScoreModel a = cpc::fit_mlp(d.x, d.y, 4, opts);
  const cpc::MlpScoreModel b = cpc::fit_mlp(d.x, d.y, 4, opts);
  REQUIRE(a.w1 == b.w1);
  REQUIRE(a.b1 == b.b1);
  REQUIRE(a.w2 == b.w2);
  REQUIRE(a.b2 == b.b2);

  cpc::MlpOptions other = opts;
  other.seed = 22;
  REQUIRE(cpc::fit_mlp(d.x, d.y, 4, other).w1 != a.w1);
}

TEST_CASE("dropout and optimizer choices change the trajectory") {
  const Xor d = xor_data(96, 12);
  cpc::MlpOptions base;
  base.epochs = 3;
  base.seed = 5;

  cpc::MlpOptions no_drop = base;
  no_drop.dropout_rate = 0.0;
  const cpc::MlpScoreModel with_drop = cpc::fit_mlp(d.x, d.y, 4, base);
  const cpc::MlpScoreModel without = cpc::fit_mlp(d.x, d.y, 4, no_drop);
  REQUIRE(with_drop.w1 != without.w1);

  cpc::MlpOptions sgd = base;
  sgd.optimizer = "sgd";
  const cpc::MlpScoreModel plain = cpc::fit_mlp(d.x, d.y, 4, sgd);
  REQUIRE(plain.w1.allFinite());
  REQUIRE(plain.w1 != with_drop.w1);
}

TEST_CASE("invalid options are rejected") {
  const Xor d = xor_data(32, 13);
  cpc::MlpOptions opts;
  opts.optimizer = "rmsprop";
  REQUIRE(code_of([&] { cpc::fit_mlp(d.x, d.y, 3, opts); }) == cpc::errc::unknown_option);
  opts.optimizer = "adam";
  opts.dropout_rate = 1.0;
  REQUIRE(code_of([&] { cpc::fit_mlp(d.x, d.y, 3, opts); }) == cpc::errc::dimension_mismatch);
  opts.dropout_rate = 0.1;
  opts.batch = 0;
  REQUIRE(code_of([&] { cpc::fit_mlp(d.x, d.y, 3, opts); }) == cpc::errc::dimension_mismatch);
}

TEST_CASE("runaway steps are reported as divergence") {
  const Xor d = xor_data(64, 14);
  cpc::MlpOptions opts;
  opts.optimizer = "sgd";
  opts.step = 1e12;
  opts.epochs = 50;
  const cpc::errc c = code_of([&] { cpc::fit_mlp(d.x, d.y, 4, opts); });
  REQUIRE((c == cpc::errc::divergence_detected || c == cpc::errc::non_finite_loss));
  REQUIRE(cpc::is_numeric_failure(c));
}
