#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spcrl/gaussian.hpp"
#include "spcrl/spdl.hpp"

namespace spcrl {

// Closed-form variational weights for contexts sampled from the current
// distribution: w_k ∝ exp((V_k + eta*alpha*(log mu_k - log nu_k)) / (eta + eta*alpha)).
// log_nu / log_mu are log-densities of the sampling distribution and the
// target at each context; any density family works (Gaussian or categorical).
inline Eigen::VectorXd variational_weights(const Eigen::VectorXd& values,
                                           const Eigen::VectorXd& log_nu,
                                           const Eigen::VectorXd& log_mu,
                                           double eta, double alpha) {
  const Eigen::Index k = values.size();
  if (k == 0 || log_nu.size() != k || log_mu.size() != k)
    throw std::invalid_argument("variational_weights: size mismatch");
  if (eta <= 0.0) throw std::invalid_argument("variational_weights: eta <= 0");
  if (alpha < 0.0) throw std::invalid_argument("variational_weights: alpha < 0");

  const Eigen::ArrayXd exponent =
      (values.array() + eta * alpha * (log_mu.array() - log_nu.array())) /
      (eta + eta * alpha);
  const double peak = exponent.maxCoeff();
  if (!std::isfinite(peak))
    throw std::runtime_error("variational_weights: degenerate exponents");
  const Eigen::ArrayXd w = (exponent - peak).exp();
  const double total = w.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::runtime_error("variational_weights: weights underflowed");
  return (w / total).matrix();
}

// M-step: weighted refit of the context Gaussian, then the usual std floor.
// Deliberately no trust region here; the floor alone prevents collapse.
inline DiagonalGaussian sprl_update(const std::vector<Eigen::VectorXd>& contexts,
                                    const Eigen::VectorXd& weights,
                                    const DiagonalGaussian& target,
                                    const Eigen::VectorXd& sigma_lb,
                                    double d_kl_lb) {
  std::vector<double> w(weights.data(), weights.data() + weights.size());
  const DiagonalGaussian fitted = fit_weighted(contexts, w);
  return std_clamp(fitted, target, sigma_lb, d_kl_lb);
}

}  // namespace spcrl
