#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "spcrl/rng.hpp"

namespace spcrl {

// Two-hidden-layer tanh MLP with a flat parameter vector and hand-written
// reverse mode. Small enough that batched Eigen products are all we need.
class Mlp {
 public:
  Mlp(int in, int hidden, int out) : in_(in), h_(hidden), out_(out) {
    params_ = Eigen::VectorXd::Zero(param_count());
  }

  int param_count() const {
    return h_ * in_ + h_ + h_ * h_ + h_ + out_ * h_ + out_;
  }

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  // Post-activation values kept for the backward pass.
  struct Cache {
    Eigen::MatrixXd x, a1, a2;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const {
    if (x.rows() != in_) throw std::invalid_argument("Mlp: input dim mismatch");
    const auto [w1, b1, w2, b2, w3, b3] = views();
    const Eigen::MatrixXd a1 =
        ((w1 * x).colwise() + b1).array().tanh().matrix();
    const Eigen::MatrixXd a2 =
        ((w2 * a1).colwise() + b2).array().tanh().matrix();
    Eigen::MatrixXd y = (w3 * a2).colwise() + b3;
    if (cache) {
      cache->x = x;
      cache->a1 = a1;
      cache->a2 = a2;
    }
    return y;
  }

  // Gradient of sum_ij dy_ij * y_ij w.r.t. the flat parameters.
  Eigen::VectorXd backward(const Cache& c, const Eigen::MatrixXd& dy) const {
    const auto [w1, b1, w2, b2, w3, b3] = views();
    (void)b1;
    (void)b2;
    (void)b3;
    Eigen::VectorXd grad(param_count());
    auto [gw1, gb1, gw2, gb2, gw3, gb3] = mutable_views(grad);

    gw3 = dy * c.a2.transpose();
    gb3 = dy.rowwise().sum();
    const Eigen::MatrixXd dz2 =
        (w3.transpose() * dy).array() * (1.0 - c.a2.array().square());
    gw2 = dz2 * c.a1.transpose();
    gb2 = dz2.rowwise().sum();
    const Eigen::MatrixXd dz1 =
        (w2.transpose() * dz2).array() * (1.0 - c.a1.array().square());
    gw1 = dz1 * c.x.transpose();
    gb1 = dz1.rowwise().sum();
    return grad;
  }

  // Orthogonal weight init (QR of a Gaussian draw, sign-fixed), zero biases.
  void init_orthogonal(RngStream& rng, double hidden_gain, double out_gain) {
    auto [w1, b1, w2, b2, w3, b3] = mutable_views(params_);
    fill_orthogonal(w1, hidden_gain, rng);
    fill_orthogonal(w2, hidden_gain, rng);
    fill_orthogonal(w3, out_gain, rng);
    b1.setZero();
    b2.setZero();
    b3.setZero();
  }

 private:
  using ConstW = Eigen::Map<const Eigen::MatrixXd>;
  using ConstB = Eigen::Map<const Eigen::VectorXd>;
  using MutW = Eigen::Map<Eigen::MatrixXd>;
  using MutB = Eigen::Map<Eigen::VectorXd>;

  std::tuple<ConstW, ConstB, ConstW, ConstB, ConstW, ConstB> views() const {
    const double* p = params_.data();
    return {ConstW(p, h_, in_),
            ConstB(p + h_ * in_, h_),
            ConstW(p + h_ * in_ + h_, h_, h_),
            ConstB(p + h_ * in_ + h_ + h_ * h_, h_),
            ConstW(p + h_ * in_ + h_ + h_ * h_ + h_, out_, h_),
            ConstB(p + h_ * in_ + h_ + h_ * h_ + h_ + out_ * h_, out_)};
  }

  std::tuple<MutW, MutB, MutW, MutB, MutW, MutB> mutable_views(
      Eigen::VectorXd& v) const {
    double* p = v.data();
    return {MutW(p, h_, in_),
            MutB(p + h_ * in_, h_),
            MutW(p + h_ * in_ + h_, h_, h_),
            MutB(p + h_ * in_ + h_ + h_ * h_, h_),
            MutW(p + h_ * in_ + h_ + h_ * h_ + h_, out_, h_),
            MutB(p + h_ * in_ + h_ + h_ * h_ + h_ + out_ * h_, out_)};
  }

  static void fill_orthogonal(MutW w, double gain, RngStream& rng) {
    const Eigen::Index r = w.rows(), c = w.cols();
    Eigen::MatrixXd a(std::max(r, c), std::min(r, c));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(
                                                a.rows(), a.cols());
    const Eigen::MatrixXd rmat =
        qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (rmat(j, j) < 0.0) q.col(j) = -q.col(j);
    w = gain * (r >= c ? q : Eigen::MatrixXd(q.transpose()));
  }

  int in_, h_, out_;
  Eigen::VectorXd params_;
};

// Standard adaptive-moment optimizer over a flat parameter vector.
class Adam {
 public:
  explicit Adam(int n, double lr = 3e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps),
        m_(Eigen::VectorXd::Zero(n)),
        v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    params -= (lr_ / c1) * m_.cwiseQuotient(
                  ((v_ / c2).cwiseSqrt().array() + eps_).matrix());
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace spcrl
