#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spcrl/rng.hpp"

namespace spcrl {

// Axis-aligned box, used both as the context space and for clipping samples.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::Index dim() const { return lo.size(); }

  Eigen::VectorXd clip(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }

  bool contains(const Eigen::VectorXd& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
};

// Diagonal Gaussian over contexts. Sampling clips to the context box; density
// and KL are those of the unclipped Gaussian (the clipped mass is treated as
// boundary pile-up, not renormalized).
class DiagonalGaussian {
 public:
  DiagonalGaussian() = default;
  DiagonalGaussian(Eigen::VectorXd mean, Eigen::VectorXd std_dev)
      : mean_(std::move(mean)), std_(std::move(std_dev)) {
    if (mean_.size() != std_.size())
      throw std::invalid_argument("DiagonalGaussian: mean/std size mismatch");
    if ((std_.array() <= 0.0).any())
      throw std::invalid_argument("DiagonalGaussian: std must be positive");
  }

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& std_dev() const { return std_; }

  Eigen::VectorXd sample(RngStream& rng) const {
    Eigen::VectorXd x(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) x[i] = rng.normal(mean_[i], std_[i]);
    return x;
  }

  Eigen::VectorXd sample(RngStream& rng, const Box& box) const {
    return box.clip(sample(rng));
  }

  double log_pdf(const Eigen::VectorXd& x) const {
    const Eigen::ArrayXd z = (x - mean_).array() / std_.array();
    return -0.5 * z.square().sum() - std_.array().log().sum() -
           0.5 * static_cast<double>(dim()) * std::log(2.0 * M_PI);
  }

  // d log p(x) / d mean  and  d log p(x) / d log std, stacked per dimension.
  Eigen::VectorXd log_pdf_grad_mean(const Eigen::VectorXd& x) const {
    return ((x - mean_).array() / std_.array().square()).matrix();
  }

  Eigen::VectorXd log_pdf_grad_log_std(const Eigen::VectorXd& x) const {
    const Eigen::ArrayXd z = (x - mean_).array() / std_.array();
    return (z.square() - 1.0).matrix();
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
};

// KL(p || q) between diagonal Gaussians, closed form.
inline double kl_divergence(const DiagonalGaussian& p, const DiagonalGaussian& q) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("kl_divergence: dimension mismatch");
  const Eigen::ArrayXd s = p.std_dev().array();
  const Eigen::ArrayXd t = q.std_dev().array();
  const Eigen::ArrayXd dm = (p.mean() - q.mean()).array();
  return ((t / s).log() + (s.square() + dm.square()) / (2.0 * t.square()) - 0.5)
      .sum();
}

// Weighted maximum-likelihood fit: weighted mean and population (biased)
// weighted variance. Weights need not be normalized; they must not all vanish.
// A collapsed dimension (zero weighted variance) throws unless a positive
// min_std floor is supplied.
inline DiagonalGaussian fit_weighted(const std::vector<Eigen::VectorXd>& samples,
                                     const std::vector<double>& weights,
                                     double min_std = 0.0) {
  if (samples.empty() || samples.size() != weights.size())
    throw std::invalid_argument("fit_weighted: bad sample/weight sizes");
  const Eigen::Index d = samples.front().size();
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w))
      throw std::invalid_argument("fit_weighted: weights must be finite and >= 0");
    wsum += w;
  }
  if (wsum <= 0.0) throw std::invalid_argument("fit_weighted: zero total weight");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < samples.size(); ++k)
    mean += (weights[k] / wsum) * samples[k];

  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Eigen::ArrayXd diff = (samples[k] - mean).array();
    var += (weights[k] / wsum) * diff.square().matrix();
  }
  if (min_std <= 0.0 && (var.array() <= 0.0).any())
    throw std::runtime_error("fit_weighted: degenerate variance");
  const Eigen::VectorXd std_dev = var.array().sqrt().max(min_std).matrix();
  return DiagonalGaussian(mean, std_dev);
}

}  // namespace spcrl
