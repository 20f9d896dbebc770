#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpc/errors.hpp"
#include "cpc/models.hpp"
#include "cpc/rng.hpp"

namespace cpc {

// One hidden ReLU layer, sigmoid output. Inference never applies dropout.
class MlpScoreModel : public ScoreModel {
 public:
  Eigen::MatrixXd w1;  // h x d
  Eigen::VectorXd b1;  // h
  Eigen::VectorXd w2;  // h
  double b2 = 0.0;

  MlpScoreModel() = default;
  MlpScoreModel(Eigen::MatrixXd w1_, Eigen::VectorXd b1_, Eigen::VectorXd w2_, double b2_)
      : w1(std::move(w1_)), b1(std::move(b1_)), w2(std::move(w2_)), b2(b2_) {}

  std::string kind() const override { return "mlp"; }
  Eigen::Index input_dim() const override { return w1.cols(); }
  Eigen::Index hidden() const { return w1.rows(); }

  Eigen::VectorXd score_rows(const Eigen::MatrixXd& rows) const override {
    Eigen::MatrixXd a = rows * w1.transpose();
    a.rowwise() += b1.transpose();
    a = a.cwiseMax(0.0);
    Eigen::VectorXd z = a * w2;
    z.array() += b2;
    return z.unaryExpr([](double v) { return clamp_score(sigmoid(v)); });
  }

  nlohmann::json to_json() const override {
    std::vector<double> w1_flat(w1.size());
    for (Eigen::Index i = 0; i < w1.rows(); ++i)
      for (Eigen::Index j = 0; j < w1.cols(); ++j)
        w1_flat[static_cast<std::size_t>(i * w1.cols() + j)] = w1(i, j);
    return {{"kind", "mlp"},
            {"hidden", w1.rows()},
            {"input_dim", w1.cols()},
            {"w1", w1_flat},
            {"b1", std::vector<double>(b1.data(), b1.data() + b1.size())},
            {"w2", std::vector<double>(w2.data(), w2.data() + w2.size())},
            {"b2", b2}};
  }
};

struct MlpOptions {
  double l1_penalty = 1e-4;  // applied to w1 entries only
  double dropout_rate = 0.1;
  int epochs = 50;
  int batch = 64;
  double step = 1e-3;
  std::string optimizer = "adam";  // "adam" or "sgd" (plain update)
  std::uint64_t seed = 0;
};

namespace detail {

// Adam moment state for one parameter tensor. Plain SGD at step 1e-3 cannot
// move the network far enough within the default epoch budget, so the
// adaptive rule is the default.
struct AdamState {
  Eigen::ArrayXXd m, v;
  explicit AdamState(Eigen::Index rows, Eigen::Index cols)
      : m(Eigen::ArrayXXd::Zero(rows, cols)), v(Eigen::ArrayXXd::Zero(rows, cols)) {}

  template <typename Param, typename Grad>
  void apply(Param&& theta, const Grad& grad, double step, double bc1, double bc2) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.square();
    theta -= step * (m / bc1) / ((v / bc2).sqrt() + eps);
  }
};

}  // namespace detail

// Seeded Glorot-uniform initialization. Draw order is fixed (w1 row-major,
// then w2); biases start at zero.
inline MlpScoreModel mlp_init(Eigen::Index d, Eigen::Index h, std::uint64_t seed) {
  require(h >= 1, errc::dimension_mismatch, "hidden width must be >= 1");
  Rng rng(seed);
  MlpScoreModel m(Eigen::MatrixXd(h, d), Eigen::VectorXd::Zero(h), Eigen::VectorXd(h), 0.0);
  const double lim1 = std::sqrt(6.0 / static_cast<double>(d + h));
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m.w1(i, j) = (2.0 * rng.uniform01() - 1.0) * lim1;
  const double lim2 = std::sqrt(6.0 / static_cast<double>(h + 1));
  for (Eigen::Index i = 0; i < h; ++i) m.w2[i] = (2.0 * rng.uniform01() - 1.0) * lim2;
  return m;
}

struct MlpGradient {
  double loss = 0.0;  // mean BCE + l1 * ||w1||_1
  Eigen::MatrixXd g_w1;
  Eigen::VectorXd g_b1;
  Eigen::VectorXd g_w2;
  double g_b2 = 0.0;
};

// Full-batch loss and (sub)gradient without dropout; sign(0) = 0 for the
// penalty term. This is the reference the finite-difference check targets.
inline MlpGradient mlp_loss_gradient(const MlpScoreModel& m, const Eigen::MatrixXd& x,
                                     const std::vector<int>& y, double l1_penalty) {
  const Eigen::Index n = x.rows();
  require(n == static_cast<Eigen::Index>(y.size()), errc::length_mismatch,
          "feature rows and label count differ");

  Eigen::MatrixXd z1 = x * m.w1.transpose();
  z1.rowwise() += m.b1.transpose();
  const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  Eigen::VectorXd z2 = a1 * m.w2;
  z2.array() += m.b2;

  MlpGradient g;
  Eigen::VectorXd dz2(n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = z2[i];
    const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
    loss += (zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi))) - yi * zi;
    dz2[i] = sigmoid(zi) - yi;
  }
  const double inv = 1.0 / static_cast<double>(n);
  loss *= inv;
  dz2 *= inv;

  g.g_w2 = a1.transpose() * dz2;
  g.g_b2 = dz2.sum();
  Eigen::MatrixXd da1 = dz2 * m.w2.transpose();            // n x h
  da1 = (z1.array() > 0.0).select(da1, 0.0);               // ReLU gate
  g.g_w1 = da1.transpose() * x;                            // h x d
  g.g_b1 = da1.colwise().sum().transpose();

  loss += l1_penalty * m.w1.cwiseAbs().sum();
  g.g_w1.array() += l1_penalty * m.w1.array().unaryExpr([](double v) {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  });
  g.loss = loss;
  return g;
}

// Minibatch stochastic gradient training on binary cross-entropy +
// l1_penalty * ||w1||_1 with inverted dropout on the hidden activations
// (training only). The update rule is Adam by default; optimizer "sgd"
// selects the plain rule. Bit-reproducible for a fixed seed on one thread:
// initialization, per-epoch shuffles, and per-batch dropout masks all come
// from one stream in a fixed order.
inline MlpScoreModel fit_mlp(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                             Eigen::Index h, const MlpOptions& opts = {}) {
  require(features.rows() == static_cast<Eigen::Index>(labels.size()), errc::length_mismatch,
          "feature rows and label count differ");
  require(opts.dropout_rate >= 0.0 && opts.dropout_rate < 1.0, errc::dimension_mismatch,
          "dropout_rate must be in [0,1)");
  require(opts.batch >= 1, errc::dimension_mismatch, "batch must be >= 1");
  require(opts.optimizer == "adam" || opts.optimizer == "sgd", errc::unknown_option,
          "optimizer must be \"adam\" or \"sgd\"");
  detail::check_two_classes(labels);

  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();

  MlpScoreModel m = mlp_init(d, h, derive_seed(opts.seed, 1));
  Rng rng(derive_seed(opts.seed, 2));

  const double keep = 1.0 - opts.dropout_rate;
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});

  FitDiagnostics diag;
  const Eigen::Index batch = std::min<Eigen::Index>(opts.batch, n);
  Eigen::MatrixXd xb(batch, d), z1(batch, h), mask(batch, h), da1(batch, h);
  Eigen::VectorXd yb(batch), dz2(batch);

  const bool adam = opts.optimizer == "adam";
  detail::AdamState st_w1(h, d), st_b1(h, 1), st_w2(h, 1), st_b2(1, 1);
  long steps = 0;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    Eigen::Index seen = 0;

    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index bs = std::min<Eigen::Index>(batch, n - start);
      for (Eigen::Index r = 0; r < bs; ++r) {
        const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(start + r)]);
        xb.row(r) = features.row(src);
        yb[r] = static_cast<double>(labels[static_cast<std::size_t>(src)]);
      }
      auto xbv = xb.topRows(bs);
      auto ybv = yb.head(bs);

      z1.topRows(bs).noalias() = xbv * m.w1.transpose();
      z1.topRows(bs).rowwise() += m.b1.transpose();
      Eigen::MatrixXd a1 = z1.topRows(bs).cwiseMax(0.0);

      if (opts.dropout_rate > 0.0) {
        for (Eigen::Index r = 0; r < bs; ++r)
          for (Eigen::Index c = 0; c < h; ++c)
            mask(r, c) = rng.uniform01() < keep ? 1.0 / keep : 0.0;
        a1.array() *= mask.topRows(bs).array();
      }

      Eigen::VectorXd z2 = a1 * m.w2;
      z2.array() += m.b2;

      double batch_loss = 0.0;
      for (Eigen::Index r = 0; r < bs; ++r) {
        const double zi = z2[r];
        batch_loss +=
            (zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi))) - ybv[r] * zi;
        dz2[r] = sigmoid(zi) - ybv[r];
      }
      require(std::isfinite(batch_loss), errc::divergence_detected, "training loss is not finite");
      epoch_loss += batch_loss;
      seen += bs;

      const double inv = 1.0 / static_cast<double>(bs);
      Eigen::VectorXd g_w2 = a1.transpose() * dz2.head(bs) * inv;
      const double g_b2 = dz2.head(bs).sum() * inv;

      da1.topRows(bs).noalias() = dz2.head(bs) * m.w2.transpose();
      if (opts.dropout_rate > 0.0) da1.topRows(bs).array() *= mask.topRows(bs).array();
      da1.topRows(bs) = (z1.topRows(bs).array() > 0.0).select(da1.topRows(bs), 0.0);

      Eigen::MatrixXd g_w1 = da1.topRows(bs).transpose() * xbv * inv;
      Eigen::VectorXd g_b1 = da1.topRows(bs).colwise().sum().transpose() * inv;

      if (opts.l1_penalty > 0.0)
        g_w1.array() += opts.l1_penalty * m.w1.array().unaryExpr([](double v) {
          return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        });

      if (adam) {
        ++steps;
        const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(steps));
        const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(steps));
        st_w1.apply(m.w1.array(), g_w1.array(), opts.step, bc1, bc2);
        st_b1.apply(m.b1.array(), g_b1.array(), opts.step, bc1, bc2);
        st_w2.apply(m.w2.array(), g_w2.array(), opts.step, bc1, bc2);
        Eigen::ArrayXXd gb2(1, 1);
        gb2(0, 0) = g_b2;
        Eigen::ArrayXXd b2a(1, 1);
        b2a(0, 0) = m.b2;
        st_b2.apply(b2a, gb2, opts.step, bc1, bc2);
        m.b2 = b2a(0, 0);
      } else {
        m.w1.noalias() -= opts.step * g_w1;
        m.b1 -= opts.step * g_b1;
        m.w2 -= opts.step * g_w2;
        m.b2 -= opts.step * g_b2;
      }
    }

    const double mean_loss = epoch_loss / static_cast<double>(seen) +
                             opts.l1_penalty * m.w1.cwiseAbs().sum();
    require(std::isfinite(mean_loss) && m.w1.allFinite() && m.w2.allFinite(),
            errc::divergence_detected, "parameters diverged during training");
    diag.objective_trace.push_back(mean_loss);
  }

  diag.iterations = opts.epochs;
  diag.final_objective = diag.objective_trace.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : diag.objective_trace.back();
  m.diagnostics = std::move(diag);
  return m;
}

}  // namespace cpc
