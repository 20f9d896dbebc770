#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cpc/sim.hpp"
#include "cpc/test.hpp"

namespace {

cpc::SimModel linear_model(double a, Eigen::Index d1, Eigen::Index d2) {
  cpc::SimModel m;
  m.id = cpc::SimModelId::m1;
  m.a = a;
  m.d1 = d1;
  m.d2 = d2;
  return m;
}

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

TEST_CASE("reports are deterministic and internally consistent") {
  const cpc::PairedSample sample = cpc::generate(linear_model(1.0, 2, 2), 257, 4242);
  cpc::ClassifierConfig cfg;
  cfg.kind = "quadratic";

  const cpc::TestReport a = cpc::cpc_test(sample, cfg, 101);
  const cpc::TestReport b = cpc::cpc_test(sample, cfg, 101);
  REQUIRE(a.to_json().dump() == b.to_json().dump());

  const cpc::TestReport c = cpc::cpc_test(sample, cfg, 202);
  REQUIRE(a.to_json().dump() != c.to_json().dump());

  // n = 257 puts 129 rows in the training half and 128 in the held-out half
  const double n2 = 128.0;
  REQUIRE(a.statistic == std::sqrt(n2) * (a.r - 0.5) / std::sqrt(a.sigma_hat_sq));
  REQUIRE(a.p_value == cpc::normal_cdf(a.statistic));
  REQUIRE(a.seed == 101);
  REQUIRE(a.r >= 0.0);
  REQUIRE(a.r <= 1.0);
  REQUIRE(a.sigma_hat_sq >= cpc::kVarianceFloor);
}

TEST_CASE("report json carries the canonical keys") {
  const cpc::PairedSample sample = cpc::generate(linear_model(1.0, 2, 2), 120, 7);

  cpc::ClassifierConfig quad;
  quad.kind = "quadratic";
  const nlohmann::json j = cpc::cpc_test(sample, quad, 5).to_json();
  for (const char* key : {"R", "sigma_hat_sq", "statistic", "p_value", "tie_count",
                          "variance_floored", "seed", "classifier"})
    REQUIRE(j.contains(key));
  REQUIRE(j["classifier"]["kind"] == "quadratic");
  REQUIRE(j["classifier"]["lambda"].get<double>() > 0.0);  // resolved, not the 0 sentinel
  REQUIRE(j["classifier"].contains("nonzeros"));
  REQUIRE(j["classifier"].contains("converged"));
  REQUIRE(j["classifier"].contains("warnings"));

  cpc::ClassifierConfig logi;  // default logistic
  const nlohmann::json jl = cpc::cpc_test(sample, logi, 5).to_json();
  REQUIRE(jl["classifier"]["kind"] == "logistic");
  REQUIRE(jl["classifier"].contains("zero_weights"));

  cpc::ClassifierConfig mlp;
  mlp.kind = "mlp";
  mlp.epochs = 2;
  const nlohmann::json jm = cpc::cpc_test(sample, mlp, 5).to_json();
  REQUIRE(jm["classifier"]["kind"] == "mlp");
  REQUIRE(jm["classifier"]["hidden"].get<int>() == 8);  // resolved 2*(d1+d2)
}

TEST_CASE("plain logistic scores tie everywhere yet stay calibrated") {
  // The two training classes share their feature means exactly, so the
  //1-penalized logistic stays at zero weights and every held-out score is
  // identical. The tie-aware machinery then runs a rank test on the tie
  // uniforms instead of dividing by a floored variance.
  const cpc::PairedSample sample =
      cpc::generate(linear_model(0.0, 2, 2), 400, cpc::derive_seed(42, 9100));
  cpc::ClassifierConfig cfg;  // logistic defaults
  const cpc::TestReport rep = cpc::cpc_test(sample, cfg, cpc::derive_seed(42, 9200));

  REQUIRE(rep.tie_count == 200LL * 200LL);
  REQUIRE_FALSE(rep.variance_floored);
  REQUIRE(rep.p_value > 0.0);
  REQUIRE(rep.p_value < 1.0);
  REQUIRE(std::isfinite(rep.statistic));
}

TEST_CASE("quadratic classifier rejects strong linear dependence") {
  cpc::ClassifierConfig cfg;
  cfg.kind = "quadratic";
  int rejections = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const cpc::PairedSample s =
        cpc::generate(linear_model(1.0, 1, 1), 512, cpc::derive_seed(42, 5000 + rep));
    if (cpc::cpc_test(s, cfg, cpc::derive_seed(42, 6000 + rep)).p_value < 0.05) ++rejections;
  }
  REQUIRE(rejections >= 18);
}

TEST_CASE("mlp classifier rejects dependence end to end") {
  cpc::ClassifierConfig cfg;
  cfg.kind = "mlp";
  int rejections = 0;
  for (int rep = 0; rep < 8; ++rep) {
    const cpc::PairedSample s =
        cpc::generate(linear_model(1.0, 2, 2), 512, cpc::derive_seed(42, 7000 + rep));
    if (cpc::cpc_test(s, cfg, cpc::derive_seed(42, 8000 + rep)).p_value < 0.05) ++rejections;
  }
  REQUIRE(rejections >= 7);
}

TEST_CASE("pipeline rejects unusable configurations") {
  const cpc::PairedSample sample = cpc::generate(linear_model(0.0, 1, 1), 64, 3);
  cpc::ClassifierConfig bad;
  bad.kind = "forest";
  REQUIRE(code_of([&] { cpc::cpc_test(sample, bad, 1); }) == cpc::errc::invalid_model);

  Eigen::MatrixXd x(7, 1), y(7, 1);
  for (int i = 0; i < 7; ++i) {
    x(i, 0) = i;
    y(i, 0) = -i;
  }
  const cpc::PairedSample tiny(x, y);
  cpc::ClassifierConfig cfg;
  REQUIRE(code_of([&] { cpc::cpc_test(tiny, cfg, 1); }) == cpc::errc::sample_too_small);
}
