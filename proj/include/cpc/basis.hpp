#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cpc/errors.hpp"

namespace cpc {

// Tensor-product polynomial basis over all s1-subsets of coordinates.
// Feature order: subsets of {0,..,d-1} in lexicographic order; within a
// subset, the first k_n exponent vectors e in {1,2,..}^s1 ordered by
// (total degree, then lexicographic). s1=1, k_n=3 gives t, t^2, t^3 per
// coordinate.
struct BasisConfig {
  int s1 = 1;
  int k_n = 3;
  std::size_t max_features = 1u << 20;
};

namespace detail {

inline void enumerate_exponents(int slots, int remaining, std::vector<int>& cur,
                                std::vector<std::vector<int>>& out, std::size_t want) {
  if (out.size() == want) return;
  if (slots == 0) {
    if (remaining == 0) out.push_back(cur);
    return;
  }
  for (int e = 1; e <= remaining - (slots - 1) && out.size() < want; ++e) {
    cur.push_back(e);
    enumerate_exponents(slots - 1, remaining - e, cur, out, want);
    cur.pop_back();
  }
}

}  // namespace detail

// The k_n exponent vectors shared by every subset.
inline std::vector<std::vector<int>> basis_exponents(int s1, int k_n) {
  require(s1 >= 1, errc::dimension_mismatch, "s1 must be >= 1");
  require(k_n >= 1, errc::dimension_mismatch, "k_n must be >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  const auto want = static_cast<std::size_t>(k_n);
  for (int degree = s1; out.size() < want; ++degree)
    detail::enumerate_exponents(s1, degree, cur, out, want);
  return out;
}

// m = C(d, s1) * k_n; throws dimension_overflow past cfg.max_features.
inline std::size_t basis_dim(Eigen::Index d, const BasisConfig& cfg) {
  require(cfg.s1 >= 1 && static_cast<Eigen::Index>(cfg.s1) <= d, errc::dimension_mismatch,
          "s1 must satisfy 1 <= s1 <= d");
  require(cfg.k_n >= 1, errc::dimension_mismatch, "k_n must be >= 1");
  const auto limit = cfg.max_features;
  unsigned long long subsets = 1;
  for (int i = 0; i < cfg.s1; ++i) {
    subsets = subsets * static_cast<unsigned long long>(d - i) /
              static_cast<unsigned long long>(i + 1);
    require(subsets <= limit, errc::dimension_overflow, "basis dimension exceeds configured cap");
  }
  const unsigned long long m = subsets * static_cast<unsigned long long>(cfg.k_n);
  require(m <= limit, errc::dimension_overflow, "basis dimension exceeds configured cap");
  return static_cast<std::size_t>(m);
}

namespace detail {

template <typename RowLike, typename Emit>
inline void expand_row(const RowLike& z, Eigen::Index d, int s1,
                       const std::vector<std::vector<int>>& exps, Emit&& emit) {
  std::vector<Eigen::Index> subset(static_cast<std::size_t>(s1));
  for (int i = 0; i < s1; ++i) subset[static_cast<std::size_t>(i)] = i;
  while (true) {
    for (const auto& e : exps) {
      double v = 1.0;
      for (int i = 0; i < s1; ++i) {
        const double t = z[subset[static_cast<std::size_t>(i)]];
        for (int rep = 0; rep < e[static_cast<std::size_t>(i)]; ++rep) v *= t;
      }
      emit(v);
    }
    // advance to the next subset in lexicographic order
    int pos = s1 - 1;
    while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == d - s1 + pos) --pos;
    if (pos < 0) break;
    ++subset[static_cast<std::size_t>(pos)];
    for (int i = pos + 1; i < s1; ++i)
      subset[static_cast<std::size_t>(i)] = subset[static_cast<std::size_t>(i - 1)] + 1;
  }
}

}  // namespace detail

inline Eigen::VectorXd basis_expand(const Eigen::VectorXd& z, const BasisConfig& cfg) {
  const auto m = basis_dim(z.size(), cfg);
  const auto exps = basis_exponents(cfg.s1, cfg.k_n);
  Eigen::VectorXd out(static_cast<Eigen::Index>(m));
  Eigen::Index at = 0;
  detail::expand_row(z, z.size(), cfg.s1, exps, [&](double v) { out[at++] = v; });
  return out;
}

// Population rms of each expanded column when the raw coordinates are iid
// standard normal: E t^{2k} = (2k-1)!!, multiplied across a subset's slots.
inline Eigen::VectorXd basis_rms_normal(Eigen::Index d, const BasisConfig& cfg) {
  const auto m = basis_dim(d, cfg);
  const auto exps = basis_exponents(cfg.s1, cfg.k_n);
  Eigen::VectorXd per_exp(static_cast<Eigen::Index>(exps.size()));
  for (std::size_t k = 0; k < exps.size(); ++k) {
    double second_moment = 1.0;
    for (int e : exps[k])
      for (int odd = 2 * e - 1; odd > 1; odd -= 2) second_moment *= odd;
    per_exp[static_cast<Eigen::Index>(k)] = std::sqrt(second_moment);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(m));
  for (Eigen::Index c = 0; c < out.size(); ++c)
    out[c] = per_exp[c % per_exp.size()];
  return out;
}

inline Eigen::MatrixXd expand_rows(const Eigen::MatrixXd& rows, const BasisConfig& cfg) {
  const auto m = basis_dim(rows.cols(), cfg);
  const auto exps = basis_exponents(cfg.s1, cfg.k_n);
  Eigen::MatrixXd out(rows.rows(), static_cast<Eigen::Index>(m));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    Eigen::Index at = 0;
    detail::expand_row(rows.row(r), rows.cols(), cfg.s1, exps,
                       [&](double v) { out(r, at++) = v; });
  }
  return out;
}

}  // namespace cpc
