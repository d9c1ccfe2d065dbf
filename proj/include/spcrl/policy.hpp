#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "spcrl/mlp.hpp"
#include "spcrl/rng.hpp"

namespace spcrl {

// Gaussian policy: network maps observation to the action mean; a single
// state-independent log-std vector controls exploration noise.
class GaussianPolicy {
 public:
  GaussianPolicy(int obs_dim, int hidden, int act_dim)
      : net_(obs_dim, hidden, act_dim),
        log_std_(Eigen::VectorXd::Zero(act_dim)) {}

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  Eigen::VectorXd& log_std() { return log_std_; }
  const Eigen::VectorXd& log_std() const { return log_std_; }
  int act_dim() const { return net_.out_dim(); }

  void init(RngStream& rng) {
    // Small output gain keeps initial action means near zero.
    net_.init_orthogonal(rng, std::sqrt(2.0), 0.01);
  }

  Eigen::VectorXd mean_action(const Eigen::VectorXd& obs) const {
    return net_.forward(obs);
  }

  Eigen::VectorXd sample_action(const Eigen::VectorXd& obs, RngStream& rng) const {
    Eigen::VectorXd a = mean_action(obs);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a[i] += std::exp(log_std_[i]) * rng.normal();
    return a;
  }

  double log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& action) const {
    const Eigen::ArrayXd z =
        (action - mean).array() / log_std_.array().exp();
    return -0.5 * z.square().sum() - log_std_.sum() -
           0.5 * static_cast<double>(act_dim()) * std::log(2.0 * M_PI);
  }

  // Backprop helpers: derivative of log_prob w.r.t. the mean and the log-std,
  // to be scaled by upstream dL/dlogprob and fed into Mlp::backward.
  Eigen::VectorXd dlogp_dmean(const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& action) const {
    const Eigen::ArrayXd var = (2.0 * log_std_.array()).exp();
    return ((action - mean).array() / var).matrix();
  }

  Eigen::VectorXd dlogp_dlog_std(const Eigen::VectorXd& mean,
                                 const Eigen::VectorXd& action) const {
    const Eigen::ArrayXd z = (action - mean).array() / log_std_.array().exp();
    return (z.square() - 1.0).matrix();
  }

 private:
  Mlp net_;
  Eigen::VectorXd log_std_;
};

}  // namespace spcrl
