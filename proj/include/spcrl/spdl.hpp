#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spcrl/gaussian.hpp"

namespace spcrl {

// Per-iteration curriculum inputs: the contexts trained on, their densities
// under the distribution that generated them, the value estimates driving the
// update, and the raw returns feeding the penalty schedule.
struct ContextSampleSet {
  std::vector<Eigen::VectorXd> contexts;
  Eigen::VectorXd old_log_pdf;
  Eigen::VectorXd values;
  Eigen::VectorXd returns;

  Eigen::Index size() const { return old_log_pdf.size(); }

  void validate() const {
    const auto k = static_cast<Eigen::Index>(contexts.size());
    if (k < 2) throw std::invalid_argument("ContextSampleSet: need K >= 2");
    if (old_log_pdf.size() != k || values.size() != k || returns.size() != k)
      throw std::invalid_argument("ContextSampleSet: array length mismatch");
  }
};

struct CurriculumConfig {
  double zeta = 1.4;         // penalty proportion
  int n_alpha = 10;          // iterations with alpha pinned to 0
  int n_offset = 5;          // iterations before any distribution update
  double trust_region = 0.25;  // KL budget per update
  Eigen::VectorXd sigma_lb;  // per-dimension std floor
  double d_kl_lb = 8000.0;   // stop flooring once KL to target drops below this
  double eta = 1.0;          // temperature (variational strategy only)
};

// Importance-ratio log clamp: the target's tiny stds produce density ratios
// far beyond double range during the late curriculum.
constexpr double kLogRatioClamp = 20.0;

// Objective: (1/K) sum_k [p_cand(c_k)/p_old(c_k)] V_k  -  alpha KL(cand || target).
inline double objective_eval(const DiagonalGaussian& candidate,
                             const ContextSampleSet& samples,
                             const DiagonalGaussian& target, double alpha) {
  samples.validate();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < samples.size(); ++k) {
    const double log_ratio =
        std::clamp(candidate.log_pdf(samples.contexts[k]) - samples.old_log_pdf[k],
                   -kLogRatioClamp, kLogRatioClamp);
    acc += std::exp(log_ratio) * samples.values[k];
  }
  const double value = acc / static_cast<double>(samples.size()) -
                       alpha * kl_divergence(candidate, target);
  if (!std::isfinite(value))
    throw std::runtime_error("objective_eval: non-finite objective");
  return value;
}

// Gradient of the objective w.r.t. (mean, log-std), stacked [d_mean; d_log_std].
// Samples whose log-ratio sits at the clamp contribute zero, consistent with
// the clamped objective.
inline Eigen::VectorXd objective_gradient(const DiagonalGaussian& candidate,
                                          const ContextSampleSet& samples,
                                          const DiagonalGaussian& target,
                                          double alpha) {
  samples.validate();
  const Eigen::Index d = candidate.dim();
  Eigen::VectorXd g_mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd g_log_std = Eigen::VectorXd::Zero(d);
  const double inv_k = 1.0 / static_cast<double>(samples.size());
  for (Eigen::Index k = 0; k < samples.size(); ++k) {
    const double raw =
        candidate.log_pdf(samples.contexts[k]) - samples.old_log_pdf[k];
    if (raw <= -kLogRatioClamp || raw >= kLogRatioClamp) continue;
    const double w = std::exp(raw) * samples.values[k] * inv_k;
    g_mean += w * candidate.log_pdf_grad_mean(samples.contexts[k]);
    g_log_std += w * candidate.log_pdf_grad_log_std(samples.contexts[k]);
  }
  // KL(cand || target) derivatives in the same parameterization.
  const Eigen::ArrayXd s = candidate.std_dev().array();
  const Eigen::ArrayXd t = target.std_dev().array();
  const Eigen::ArrayXd dm = (candidate.mean() - target.mean()).array();
  g_mean -= alpha * (dm / t.square()).matrix();
  g_log_std -= alpha * (s.square() / t.square() - 1.0).matrix();

  Eigen::VectorXd g(2 * d);
  g << g_mean, g_log_std;
  if (!g.allFinite())
    throw std::runtime_error("objective_gradient: non-finite gradient");
  return g;
}

// Std floor: while the distribution is still far from the target, forbid
// premature concentration; once close (KL below the threshold) let it shrink.
inline DiagonalGaussian std_clamp(const DiagonalGaussian& nu,
                                  const DiagonalGaussian& target,
                                  const Eigen::VectorXd& sigma_lb,
                                  double d_kl_lb) {
  if (sigma_lb.size() != nu.dim())
    throw std::invalid_argument("std_clamp: sigma_lb dimension mismatch");
  if (kl_divergence(nu, target) <= d_kl_lb) return nu;
  return DiagonalGaussian(nu.mean(), nu.std_dev().cwiseMax(sigma_lb));
}

struct AlphaResult {
  double alpha = 0.0;
  bool converged = false;  // KL to target vanished; caller freezes at target
};

// Penalty schedule: zero for the first n_alpha iterations, then proportional
// to last iteration's mean return over the current distance to the target.
// `iteration` is 1-based.
inline AlphaResult compute_alpha(int iteration, const ContextSampleSet& samples,
                                 const DiagonalGaussian& nu,
                                 const DiagonalGaussian& target,
                                 const CurriculumConfig& cfg) {
  AlphaResult out;
  const double kl = kl_divergence(nu, target);
  if (kl < 1e-10) {
    out.converged = true;
    return out;
  }
  if (iteration <= cfg.n_alpha) return out;
  const double mean_return = samples.returns.mean();
  if (mean_return <= 0.0) return out;
  out.alpha = cfg.zeta * mean_return / kl;
  return out;
}

struct ContextUpdateResult {
  DiagonalGaussian nu;
  bool ok = true;  // false: optimizer failed, nu is the unchanged input
};

namespace detail {

inline Eigen::VectorXd pack(const DiagonalGaussian& g) {
  Eigen::VectorXd x(2 * g.dim());
  x << g.mean(), g.std_dev().array().log().matrix();
  return x;
}

inline DiagonalGaussian unpack(const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size() / 2;
  return DiagonalGaussian(x.head(d), x.tail(d).array().exp().matrix());
}

}  // namespace detail

// Maximizes the objective inside the KL ball around the current distribution.
// Projected backtracking ascent in (mean, log-std): each trial step that lands
// outside the ball is bisected back along its segment until feasible, and is
// accepted only if it improves the objective. Starting from the (feasible)
// current point this guarantees monotone feasible improvement; worst case the
// input comes back unchanged. The std floor is applied after optimization.
inline ContextUpdateResult update_context(const DiagonalGaussian& nu,
                                          const ContextSampleSet& samples,
                                          const DiagonalGaussian& target,
                                          double alpha,
                                          const CurriculumConfig& cfg) {
  const double eps = cfg.trust_region;
  try {
    samples.validate();
    const Eigen::VectorXd x0 = detail::pack(nu);
    auto feasible = [&](const Eigen::VectorXd& x) {
      return kl_divergence(detail::unpack(x), nu) <= eps;
    };
    auto objective = [&](const Eigen::VectorXd& x) {
      return objective_eval(detail::unpack(x), samples, target, alpha);
    };

    Eigen::VectorXd x = x0;
    double fx = objective(x);
    double step = 0.5;
    for (int outer = 0; outer < 60; ++outer) {
      const Eigen::VectorXd g =
          objective_gradient(detail::unpack(x), samples, target, alpha);
      const double gnorm = g.norm();
      if (gnorm < 1e-12) break;
      const Eigen::VectorXd dir = g / gnorm;

      bool accepted = false;
      double t = step;
      for (int bt = 0; bt < 40 && !accepted; ++bt, t *= 0.5) {
        Eigen::VectorXd trial = x + t * dir;
        if (!feasible(trial)) {
          // Pull the trial back toward x until it re-enters the KL ball.
          double lo = 0.0, hi = t;
          for (int bis = 0; bis < 50; ++bis) {
            const double mid = 0.5 * (lo + hi);
            if (feasible(x + mid * dir))
              lo = mid;
            else
              hi = mid;
          }
          trial = x + lo * dir;
          if (!feasible(trial)) continue;
        }
        const double ft = objective(trial);
        if (ft > fx + 1e-12) {
          x = trial;
          fx = ft;
          accepted = true;
          step = std::min(t * 2.0, 4.0);
        }
      }
      if (!accepted) break;
    }

    DiagonalGaussian out = detail::unpack(x);
    // Contract check before handing the result back.
    if (kl_divergence(out, nu) > eps + 1e-6 ||
        objective_eval(out, samples, target, alpha) <
            objective_eval(nu, samples, target, alpha) - 1e-9)
      return {nu, false};
    out = std_clamp(out, target, cfg.sigma_lb, cfg.d_kl_lb);
    return {out, true};
  } catch (const std::exception&) {
    return {nu, false};
  }
}

}  // namespace spcrl
