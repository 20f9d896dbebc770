#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cpc/errors.hpp"
#include "cpc/rng.hpp"

namespace cpc {

// Held-out scores in I2 index order. The cyclic neighbor of position i is
// (i+1) mod n2, matching the pairing used when the rows were built.
struct ScoredEvaluation {
  std::vector<double> s_joint;  // score of (X_i, Y_i)
  std::vector<double> s_prod;   // score of (X_i, Y_next(i))

  ScoredEvaluation() = default;
  ScoredEvaluation(std::vector<double> joint, std::vector<double> prod)
      : s_joint(std::move(joint)), s_prod(std::move(prod)) {
    require(s_joint.size() == s_prod.size(), errc::length_mismatch,
            "score vectors differ in length");
  }

  std::size_t n2() const { return s_joint.size(); }
};

// Right-continuous ECDF with the weak convention F(t) = #{values <= t} / m.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
    require(!sorted_.empty(), errc::empty_input, "ecdf needs at least one value");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double t) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

struct RankSum {
  double r = 0.0;
  long long tie_pairs = 0;  // #{(i,j): s_joint[i] == s_prod[j]}
};

namespace detail {

// One uniform per element, joint side first. Both rank-sum implementations
// must consume identical draws, so the layout is fixed here.
inline void tie_uniforms(std::size_t n2, std::uint64_t tie_seed, std::vector<double>& zeta,
                         std::vector<double>& eta) {
  Rng rng(tie_seed);
  zeta.resize(n2);
  eta.resize(n2);
  for (auto& z : zeta) z = rng.uniform01();
  for (auto& e : eta) e = rng.uniform01();
}

// #{(a,b) in A x B : a < b} for sorted inputs.
inline long long count_less_pairs(const std::vector<double>& a, const std::vector<double>& b) {
  long long count = 0;
  std::size_t ia = 0;
  for (const double bv : b) {
    while (ia < a.size() && a[ia] < bv) ++ia;
    count += static_cast<long long>(ia);
  }
  return count;
}

}  // namespace detail

// R = n2^-2 * sum_{i,j} [ 1{s_joint[i] < s_prod[j]}
//                        + 1{zeta_i < eta_j} * 1{s_joint[i] == s_prod[j]} ].
// Sort-and-merge: strict pairs by a two-pointer sweep, tie blocks resolved by
// merging the blocks' uniforms, so the result equals the double loop exactly.
inline RankSum rank_sum_R(const ScoredEvaluation& eval, std::uint64_t tie_seed) {
  const std::size_t n2 = eval.n2();
  require(n2 >= 3, errc::length_mismatch, "rank sum needs n2 >= 3");

  std::vector<double> zeta, eta;
  detail::tie_uniforms(n2, tie_seed, zeta, eta);

  std::vector<std::size_t> ja(n2), jb(n2);
  for (std::size_t i = 0; i < n2; ++i) ja[i] = jb[i] = i;
  std::sort(ja.begin(), ja.end(),
            [&](std::size_t l, std::size_t r) { return eval.s_joint[l] < eval.s_joint[r]; });
  std::sort(jb.begin(), jb.end(),
            [&](std::size_t l, std::size_t r) { return eval.s_prod[l] < eval.s_prod[r]; });

  std::vector<double> a(n2), b(n2);
  for (std::size_t i = 0; i < n2; ++i) a[i] = eval.s_joint[ja[i]];
  for (std::size_t i = 0; i < n2; ++i) b[i] = eval.s_prod[jb[i]];

  long long count = detail::count_less_pairs(a, b);
  long long tie_pairs = 0;

  // Walk common values; within a tie block count zeta < eta pairs.
  std::size_t ia = 0, ib = 0;
  std::vector<double> zblock, eblock;
  while (ia < n2 && ib < n2) {
    if (a[ia] < b[ib]) {
      ++ia;
    } else if (b[ib] < a[ia]) {
      ++ib;
    } else {
      const double v = a[ia];
      zblock.clear();
      eblock.clear();
      while (ia < n2 && a[ia] == v) zblock.push_back(zeta[ja[ia++]]);
      while (ib < n2 && b[ib] == v) eblock.push_back(eta[jb[ib++]]);
      tie_pairs += static_cast<long long>(zblock.size()) * static_cast<long long>(eblock.size());
      std::sort(zblock.begin(), zblock.end());
      std::sort(eblock.begin(), eblock.end());
      count += detail::count_less_pairs(zblock, eblock);
    }
  }

  const double m = static_cast<double>(n2);
  return {static_cast<double>(count) / (m * m), tie_pairs};
}

// Reference double loop; same uniforms, same integer count.
inline RankSum rank_sum_R_naive(const ScoredEvaluation& eval, std::uint64_t tie_seed) {
  const std::size_t n2 = eval.n2();
  require(n2 >= 3, errc::length_mismatch, "rank sum needs n2 >= 3");

  std::vector<double> zeta, eta;
  detail::tie_uniforms(n2, tie_seed, zeta, eta);

  long long count = 0, tie_pairs = 0;
  for (std::size_t i = 0; i < n2; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      if (eval.s_joint[i] < eval.s_prod[j]) {
        ++count;
      } else if (eval.s_joint[i] == eval.s_prod[j]) {
        ++tie_pairs;
        if (zeta[i] < eta[j]) ++count;
      }
    }
  }
  const double m = static_cast<double>(n2);
  return {static_cast<double>(count) / (m * m), tie_pairs};
}

struct VarianceEstimate {
  double value = 0.0;  // floored value used by the test
  double raw = 0.0;    // unfloored plug-in
  bool floored = false;
};

inline constexpr double kVarianceFloor = 1e-4;

// sigma_hat^2 = 1/6 - (2/n2) sum_i h1(i) h1'(i) - (2/n2) sum_i h1(next(i)) h1'(i)
// with h1(i) = 1/2 - F2(s_joint[i]), h1'(i) = 1/2 - F2(s_prod[i]) and F2 the
// ECDF of the product-side scores (used for both vectors). Both covariance
// sums subtract, so a negative raw value is possible in finite samples; it is
// floored at 1e-4 and flagged. Since |h1| <= 1/2 the raw value never
// exceeds 1/6 + 1/2 + 1/2 = 7/6.
inline VarianceEstimate variance_hat(const ScoredEvaluation& eval) {
  const std::size_t n2 = eval.n2();
  require(n2 >= 3, errc::length_mismatch, "variance estimate needs n2 >= 3");

  const Ecdf f2(eval.s_prod);
  std::vector<double> h1(n2), h1p(n2);
  for (std::size_t i = 0; i < n2; ++i) {
    h1[i] = 0.5 - f2(eval.s_joint[i]);
    h1p[i] = 0.5 - f2(eval.s_prod[i]);
  }
  double s_same = 0.0, s_next = 0.0;
  for (std::size_t i = 0; i < n2; ++i) {
    s_same += h1[i] * h1p[i];
    s_next += h1[(i + 1) % n2] * h1p[i];
  }
  const double m = static_cast<double>(n2);
  const double raw = 1.0 / 6.0 - (2.0 / m) * s_same - (2.0 / m) * s_next;
  if (raw < kVarianceFloor) return {kVarianceFloor, raw, true};
  return {raw, raw, false};
}

// Tie-aware variant used by the test pipeline. Conceptually each score is
// replaced by the lexicographic pair (score, uniform), with the uniforms drawn
// exactly as in rank_sum_R for the same tie_seed; the pairs are continuous
// with probability one, so the plug-in formula keeps its meaning even when a
// classifier emits constant or atomic scores. With no tied values anywhere
// this reduces exactly to variance_hat(eval): an all-tie evaluation degrades
// to a calibrated rank test on the uniforms instead of a floored variance.
inline VarianceEstimate variance_hat(const ScoredEvaluation& eval, std::uint64_t tie_seed) {
  const std::size_t n2 = eval.n2();
  require(n2 >= 3, errc::length_mismatch, "variance estimate needs n2 >= 3");

  std::vector<double> zeta, eta;
  detail::tie_uniforms(n2, tie_seed, zeta, eta);

  std::vector<std::pair<double, double>> keys(n2);
  for (std::size_t i = 0; i < n2; ++i) keys[i] = {eval.s_prod[i], eta[i]};
  std::sort(keys.begin(), keys.end());
  const double m = static_cast<double>(n2);
  auto f2 = [&](double s, double u) {
    const auto it = std::upper_bound(keys.begin(), keys.end(), std::make_pair(s, u));
    return static_cast<double>(it - keys.begin()) / m;
  };

  std::vector<double> h1(n2), h1p(n2);
  for (std::size_t i = 0; i < n2; ++i) {
    h1[i] = 0.5 - f2(eval.s_joint[i], zeta[i]);
    h1p[i] = 0.5 - f2(eval.s_prod[i], eta[i]);
  }
  double s_same = 0.0, s_next = 0.0;
  for (std::size_t i = 0; i < n2; ++i) {
    s_same += h1[i] * h1p[i];
    s_next += h1[(i + 1) % n2] * h1p[i];
  }
  const double raw = 1.0 / 6.0 - (2.0 / m) * s_same - (2.0 / m) * s_next;
  if (raw < kVarianceFloor) return {kVarianceFloor, raw, true};
  return {raw, raw, false};
}

// Reference evaluation with O(n2^2) counting ECDFs; shares no code with the
// sorted-ECDF path above.
inline VarianceEstimate variance_hat_naive(const ScoredEvaluation& eval) {
  const std::size_t n2 = eval.n2();
  require(n2 >= 3, errc::length_mismatch, "variance estimate needs n2 >= 3");

  const double m = static_cast<double>(n2);
  auto f2 = [&](double t) {
    std::size_t c = 0;
    for (const double v : eval.s_prod)
      if (v <= t) ++c;
    return static_cast<double>(c) / m;
  };
  std::vector<double> h1(n2), h1p(n2);
  for (std::size_t i = 0; i < n2; ++i) {
    h1[i] = 0.5 - f2(eval.s_joint[i]);
    h1p[i] = 0.5 - f2(eval.s_prod[i]);
  }
  double s_same = 0.0, s_next = 0.0;
  for (std::size_t i = 0; i < n2; ++i) {
    s_same += h1[i] * h1p[i];
    s_next += h1[(i + 1) % n2] * h1p[i];
  }
  const double raw = 1.0 / 6.0 - (2.0 / m) * s_same - (2.0 / m) * s_next;
  if (raw < kVarianceFloor) return {kVarianceFloor, raw, true};
  return {raw, raw, false};
}

// Reference double loop for the tie-aware variant; same uniforms.
inline VarianceEstimate variance_hat_naive(const ScoredEvaluation& eval, std::uint64_t tie_seed) {
  const std::size_t n2 = eval.n2();
  require(n2 >= 3, errc::length_mismatch, "variance estimate needs n2 >= 3");

  std::vector<double> zeta, eta;
  detail::tie_uniforms(n2, tie_seed, zeta, eta);

  const double m = static_cast<double>(n2);
  auto f2 = [&](double s, double u) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n2; ++j)
      if (eval.s_prod[j] < s || (eval.s_prod[j] == s && eta[j] <= u)) ++c;
    return static_cast<double>(c) / m;
  };
  std::vector<double> h1(n2), h1p(n2);
  for (std::size_t i = 0; i < n2; ++i) {
    h1[i] = 0.5 - f2(eval.s_joint[i], zeta[i]);
    h1p[i] = 0.5 - f2(eval.s_prod[i], eta[i]);
  }
  double s_same = 0.0, s_next = 0.0;
  for (std::size_t i = 0; i < n2; ++i) {
    s_same += h1[i] * h1p[i];
    s_next += h1[(i + 1) % n2] * h1p[i];
  }
  const double raw = 1.0 / 6.0 - (2.0 / m) * s_same - (2.0 / m) * s_next;
  if (raw < kVarianceFloor) return {kVarianceFloor, raw, true};
  return {raw, raw, false};
}

// Mean score gap: n2^-1 sum_i { s_joint[i] - s_prod[i] }. Descriptive; no
// calibrated null of its own.
inline double t_statistic(const ScoredEvaluation& eval) {
  require(eval.n2() >= 1, errc::length_mismatch, "empty evaluation");
  double s = 0.0;
  for (std::size_t i = 0; i < eval.n2(); ++i) s += eval.s_joint[i] - eval.s_prod[i];
  return s / static_cast<double>(eval.n2());
}

// Mean logit gap: n2^-1 sum_i [ logit(s_joint[i]) - logit(s_prod[i]) ].
// Score clamping upstream keeps the logits finite.
inline double kl_statistic(const ScoredEvaluation& eval) {
  require(eval.n2() >= 1, errc::length_mismatch, "empty evaluation");
  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  double s = 0.0;
  for (std::size_t i = 0; i < eval.n2(); ++i) s += logit(eval.s_joint[i]) - logit(eval.s_prod[i]);
  return s / static_cast<double>(eval.n2());
}

}  // namespace cpc
