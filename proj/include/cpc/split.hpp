#pragma once

#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpc/errors.hpp"
#include "cpc/rng.hpp"

namespace cpc {

// Seeded partition of {0..n-1}. i1 trains the classifier, i2 is scored.
// Index order matters: the cyclic pairing walks each list in its stored order.
struct SplitPlan {
  std::vector<Eigen::Index> i1;
  std::vector<Eigen::Index> i2;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const { return {{"i1", i1}, {"i2", i2}, {"seed", seed}}; }

  static SplitPlan from_json(const nlohmann::json& j) {
    SplitPlan p;
    p.i1 = j.at("i1").get<std::vector<Eigen::Index>>();
    p.i2 = j.at("i2").get<std::vector<Eigen::Index>>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
  }
};

// Uniform shuffle, first ceil(n/2) indices go to I1. The shuffle (rather than
// a literal prefix) protects against sorted input files; n >= 8 keeps both
// halves large enough for a non-degenerate cycle and ECDF.
inline SplitPlan split_indices(Eigen::Index n, std::uint64_t seed) {
  require(n >= 8, errc::sample_too_small, "split needs n >= 8, got " + std::to_string(n));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n1 = static_cast<std::size_t>((n + 1) / 2);
  SplitPlan plan;
  plan.i1.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n1));
  plan.i2.assign(order.begin() + static_cast<std::ptrdiff_t>(n1), order.end());
  plan.seed = seed;
  return plan;
}

// Source index pairs for the permuted rows: element k is (x index, y index)
// = (indices[k], indices[(k+1) mod m]). The y side is one full cycle.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> cyclic_pairs(
    const std::vector<Eigen::Index>& indices) {
  const std::size_t m = indices.size();
  require(m >= 3, errc::degenerate_pairing,
          "cyclic pairing needs at least 3 indices, got " + std::to_string(m));
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs(m);
  for (std::size_t k = 0; k < m; ++k) pairs[k] = {indices[k], indices[(k + 1) % m]};
  return pairs;
}

// Materialized permuted rows (X_k kept, Y_k taken from the cyclic successor).
// Sample row writers emit contiguous values and MatrixXd rows are strided, so
// every row passes through a scratch buffer.
template <class Sample>
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cyclic_permute(const Sample& sample,
                                                           const std::vector<Eigen::Index>& indices) {
  const auto pairs = cyclic_pairs(indices);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.size()), sample.d1());
  Eigen::MatrixXd y(static_cast<Eigen::Index>(pairs.size()), sample.d2());
  std::vector<double> bx(static_cast<std::size_t>(sample.d1()));
  std::vector<double> by(static_cast<std::size_t>(sample.d2()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [xi, yi] = pairs[k];
    require(xi >= 0 && xi < sample.n() && yi >= 0 && yi < sample.n(), errc::index_out_of_bounds,
            "pairing index outside sample");
    sample.write_x_row(xi, bx.data());
    sample.write_y_row(yi, by.data());
    x.row(static_cast<Eigen::Index>(k)) =
        Eigen::Map<const Eigen::RowVectorXd>(bx.data(), sample.d1());
    y.row(static_cast<Eigen::Index>(k)) =
        Eigen::Map<const Eigen::RowVectorXd>(by.data(), sample.d2());
  }
  return {std::move(x), std::move(y)};
}

// Classifier input: joint rows labeled 1 stacked over permuted rows labeled 0,
// plus the two evaluation tables over I2 in index order. The I2 row order is
// what the variance estimator's neighbor map (i -> i+1, wrap) refers to.
struct TrainEvalTables {
  Eigen::MatrixXd train_features;  // 2*|I1| x (d1+d2)
  std::vector<int> train_labels;   // 1 for joint rows, 0 for permuted rows
  Eigen::MatrixXd eval_joint;      // |I2| x (d1+d2), rows (X_i, Y_i)
  Eigen::MatrixXd eval_prod;       // |I2| x (d1+d2), rows (X_i, Y_next(i))
};

namespace detail {

// Writes the concatenated (X_xi, Y_yi) row through a contiguous scratch
// buffer; MatrixXd rows are strided and must not be written via raw pointers.
template <class Sample>
void set_pair_row(const Sample& s, Eigen::Index xi, Eigen::Index yi, std::vector<double>& buf,
                  Eigen::MatrixXd& dst, Eigen::Index row) {
  s.write_x_row(xi, buf.data());
  s.write_y_row(yi, buf.data() + s.d1());
  dst.row(row) = Eigen::Map<const Eigen::RowVectorXd>(buf.data(), dst.cols());
}

}  // namespace detail

template <class Sample>
TrainEvalTables build_training_sets(const Sample& sample, const SplitPlan& plan) {
  const Eigen::Index d = sample.d1() + sample.d2();
  const auto m1 = static_cast<Eigen::Index>(plan.i1.size());
  const auto m2 = static_cast<Eigen::Index>(plan.i2.size());
  require(m1 + m2 == sample.n(), errc::dimension_mismatch, "plan does not cover the sample");

  const auto pairs1 = cyclic_pairs(plan.i1);
  const auto pairs2 = cyclic_pairs(plan.i2);

  TrainEvalTables t;
  t.train_features.resize(2 * m1, d);
  t.train_labels.assign(static_cast<std::size_t>(2 * m1), 0);
  std::vector<double> buf(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < m1; ++k) {
    const Eigen::Index i = plan.i1[static_cast<std::size_t>(k)];
    detail::set_pair_row(sample, i, i, buf, t.train_features, k);
    t.train_labels[static_cast<std::size_t>(k)] = 1;
  }
  for (Eigen::Index k = 0; k < m1; ++k) {
    const auto [xi, yi] = pairs1[static_cast<std::size_t>(k)];
    detail::set_pair_row(sample, xi, yi, buf, t.train_features, m1 + k);
  }

  t.eval_joint.resize(m2, d);
  t.eval_prod.resize(m2, d);
  for (Eigen::Index k = 0; k < m2; ++k) {
    const Eigen::Index i = plan.i2[static_cast<std::size_t>(k)];
    detail::set_pair_row(sample, i, i, buf, t.eval_joint, k);
    const auto [xi, yi] = pairs2[static_cast<std::size_t>(k)];
    detail::set_pair_row(sample, xi, yi, buf, t.eval_prod, k);
  }
  return t;
}

}  // namespace cpc
