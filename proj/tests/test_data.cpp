#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "cpc/data.hpp"
#include "cpc/rng.hpp"

namespace {

std::string tmp_path(const std::string& name) {
  return std::string(CPC_TEST_TMPDIR) + "/" + name;
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
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

cpc::PairedSample random_sample(Eigen::Index n, Eigen::Index d1, Eigen::Index d2,
                                std::uint64_t seed) {
  cpc::Rng rng(seed);
  Eigen::MatrixXd x(n, d1), y(n, d2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d1; ++j) x(i, j) = rng.normal();
    for (Eigen::Index j = 0; j < d2; ++j) y(i, j) = rng.normal();
  }
  return {std::move(x), std::move(y)};
}

}  // namespace

TEST_CASE("csv write and load round trip is bit exact") {
  const cpc::PairedSample s = random_sample(9, 3, 2, 5);
  const std::string path = tmp_path("roundtrip.csv");
  cpc::write_paired_csv(s, path);
  const cpc::PairedSample r = cpc::load_paired_csv(path, {"x1", "x2", "x3"}, {"y1", "y2"});
  REQUIRE(r.x == s.x);
  REQUIRE(r.y == s.y);
}

TEST_CASE("selectors pick columns by name in the requested order") {
  const std::string path = tmp_path("named.csv");
  spit(path, "a,b,c,d\n1,2,3,4\n5,6,7,8\n9,10,11,12\n13,14,15,16\n");
  const cpc::PairedSample s = cpc::load_paired_csv(path, {"c", "a"}, {"d"});
  REQUIRE(s.n() == 4);
  REQUIRE(s.x(0, 0) == 3.0);
  REQUIRE(s.x(0, 1) == 1.0);
  REQUIRE(s.y(3, 0) == 16.0);
}

TEST_CASE("csv tolerates CRLF line endings and padded cells") {
  const std::string path = tmp_path("crlf.csv");
  spit(path, "a, b\r\n1 ,2\r\n3, 4\r\n5,6\r\n7,8\r\n");
  const cpc::PairedSample s = cpc::load_paired_csv(path, {"a"}, {"b"});
  REQUIRE(s.x(0, 0) == 1.0);
  REQUIRE(s.y(1, 0) == 4.0);
}

TEST_CASE("csv loader rejects malformed inputs with typed errors") {
  const std::string path = tmp_path("bad.csv");

  REQUIRE(code_of([&] { cpc::load_paired_csv(tmp_path("nope.csv"), {"a"}, {"b"}); }) ==
          cpc::errc::file_not_found);

  spit(path, "a,b\n1,2\n3,4\n5,6\n7,8\n");
  REQUIRE(code_of([&] { cpc::load_paired_csv(path, {"z"}, {"b"}); }) ==
          cpc::errc::empty_selection);
  REQUIRE(code_of([&] { cpc::load_paired_csv(path, {"a", "a"}, {"b"}); }) ==
          cpc::errc::overlapping_selectors);
  REQUIRE(code_of([&] { cpc::load_paired_csv(path, {"a"}, {"a"}); }) ==
          cpc::errc::overlapping_selectors);

  spit(path, "a,b\n1,2\n3\n5,6\n7,8\n");
  REQUIRE(code_of([&] { cpc::load_paired_csv(path, {"a"}, {"b"}); }) == cpc::errc::parse_error);

  spit(path, "a,b\n1,2\n3,oops\n5,6\n7,8\n");
  REQUIRE(code_of([&] { cpc::load_paired_csv(path, {"a"}, {"b"}); }) == cpc::errc::parse_error);

  spit(path, "a,b\n1,2\n3,nan\n5,6\n7,8\n");
  REQUIRE(code_of([&] { cpc::load_paired_csv(path, {"a"}, {"b"}); }) == cpc::errc::parse_error);

  spit(path, "a,b\n1,2\n3,4\n5,6\n");
  REQUIRE(code_of([&] { cpc::load_paired_csv(path, {"a"}, {"b"}); }) ==
          cpc::errc::sample_too_small);
}

TEST_CASE("sparse triplet pair loads and densifies") {
  const std::string px = tmp_path("x.mtx");
  const std::string py = tmp_path("y.mtx");
  spit(px,
       "% sparse x block\n"
       "4 3 3\n"
       "1 1 2.5\n"
       "3 2 -1\n"
       "4 3 7\n");
  spit(py,
       "# sparse y block\n"
       "4 2 2\n"
       "2 1 1.5\n"
       "4 2 -3\n");
  const cpc::SparsePairedSample s = cpc::load_sparse_market(px, py);
  REQUIRE(s.n() == 4);
  REQUIRE(s.d1() == 3);
  REQUIRE(s.d2() == 2);

  Eigen::MatrixXd ex(4, 3), ey(4, 2);
  ex << 2.5, 0, 0, 0, 0, 0, 0, -1, 0, 0, 0, 7;
  ey << 0, 0, 1.5, 0, 0, 0, 0, -3;
  const cpc::PairedSample dense = s.to_dense();
  REQUIRE(dense.x == ex);
  REQUIRE(dense.y == ey);

  std::vector<double> row(3);
  s.write_x_row(2, row.data());
  REQUIRE(row == std::vector<double>({0.0, -1.0, 0.0}));
}

TEST_CASE("sparse loader rejects malformed triplets") {
  const std::string px = tmp_path("badx.mtx");
  const std::string py = tmp_path("goody.mtx");
  spit(py, "4 1 1\n1 1 1\n");

  spit(px, "4 2 1\n5 1 1\n");
  REQUIRE(code_of([&] { cpc::load_sparse_market(px, py); }) == cpc::errc::index_out_of_bounds);

  spit(px, "4 2 2\n1 1 1\n1 1 2\n");
  REQUIRE(code_of([&] { cpc::load_sparse_market(px, py); }) == cpc::errc::duplicate_entry);

  spit(px, "4 2 3\n1 1 1\n");
  REQUIRE(code_of([&] { cpc::load_sparse_market(px, py); }) == cpc::errc::parse_error);

  spit(px, "6 2 1\n1 1 1\n");
  REQUIRE(code_of([&] { cpc::load_sparse_market(px, py); }) == cpc::errc::row_count_mismatch);
}

TEST_CASE("paired sample construction validates shape and content") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 2);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(4, 1);
  REQUIRE(code_of([&] { cpc::PairedSample(x, y); }) == cpc::errc::row_count_mismatch);

  Eigen::MatrixXd y5 = Eigen::MatrixXd::Zero(5, 1);
  y5(2, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE(code_of([&] { cpc::PairedSample(x, y5); }) == cpc::errc::parse_error);

  Eigen::MatrixXd x3 = Eigen::MatrixXd::Zero(3, 2);
  Eigen::MatrixXd y3 = Eigen::MatrixXd::Zero(3, 1);
  REQUIRE(code_of([&] { cpc::PairedSample(x3, y3); }) == cpc::errc::sample_too_small);
}

TEST_CASE("standardize centers and scales each non-constant column") {
  cpc::PairedSample s = random_sample(50, 3, 2, 77);
  s.x.col(1).array() = s.x.col(1).array() * 10.0 + 100.0;
  const auto [z, stats] = cpc::standardize(s);

  for (Eigen::Index j = 0; j < 3; ++j) {
    REQUIRE(std::abs(z.x.col(j).mean()) < 1e-12);
    const double ss = (z.x.col(j).array() - z.x.col(j).mean()).square().sum();
    REQUIRE(std::abs(std::sqrt(ss / 49.0) - 1.0) < 1e-12);
  }
  REQUIRE(std::abs(stats.x_mean[1] - 100.0) < 3.0);
  REQUIRE(stats.x_std[1] > 5.0);
}

TEST_CASE("standardize leaves constant columns untouched and flags them") {
  cpc::PairedSample s = random_sample(20, 2, 1, 99);
  s.x.col(0).setConstant(3.5);
  const auto [z, stats] = cpc::standardize(s);
  REQUIRE((z.x.col(0).array() == 3.5).all());
  REQUIRE(stats.x_std[0] == 0.0);
  REQUIRE(stats.x_mean[0] == 3.5);
  REQUIRE(stats.x_std[1] > 0.0);
}
