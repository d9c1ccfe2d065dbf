#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spcrl/discrete_cmdp.hpp"
#include "spcrl/inference.hpp"
#include "spcrl/rng.hpp"
#include "spcrl/sprl.hpp"

namespace spcrl {

// Randomized self-checks of the inference layer on small enumerable CMDPs.
// The CLI exposes them as `verify-inference`; the acceptance suite runs the
// same entry points with the same tolerances.

struct VerifyCheck {
  std::string name;
  double worst = 0.0;  // largest deviation observed
  double tolerance = 0.0;
  bool pass = false;
};

namespace verify_detail {

inline Eigen::MatrixXd random_simplex_rows(RngStream& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      m(r, c) = -std::log(1.0 - rng.uniform());
      sum += m(r, c);
    }
    m.row(r) /= sum;
  }
  return m;
}

inline Eigen::VectorXd random_categorical(RngStream& rng, int n) {
  Eigen::VectorXd p(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    p[i] = 0.05 + rng.uniform();  // support bounded away from zero
    sum += p[i];
  }
  return p / sum;
}

inline DiscreteCMDP random_cmdp(RngStream& rng, int n_states, int n_actions,
                                int n_contexts, int horizon, double gamma) {
  DiscreteCMDP m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.n_contexts = n_contexts;
  m.horizon = horizon;
  m.gamma = gamma;
  m.start_state = 0;
  for (int c = 0; c < n_contexts; ++c) {
    m.transition.push_back(random_simplex_rows(rng, n_states * n_actions, n_states));
    Eigen::MatrixXd r(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a) r(s, a) = rng.uniform(-1.0, 2.0);
    m.reward.push_back(r);
  }
  m.validate();
  return m;
}

inline OptimalityModel random_model(RngStream& rng) {
  OptimalityModel m;
  m.cmdp = random_cmdp(rng, 3, 2, 4, 3, 1.0);
  m.policy = random_simplex_rows(rng, 3, 2);
  m.prior = random_categorical(rng, 4);
  m.target = random_categorical(rng, 4);
  m.eta = std::exp(rng.uniform(std::log(0.3), std::log(3.0)));
  m.validate();
  return m;
}

}  // namespace verify_detail

// The tempered-inference objective plus (1+alpha) KL(p || q*) must not depend
// on the trial distribution p.
inline VerifyCheck check_objective_residual(std::uint64_t seed = 101,
                                            int n_models = 50) {
  VerifyCheck out{"objective-residual-constant", 0.0, 1e-8, false};
  RngStream rng(seed);
  const double alphas[] = {0.0, 0.5, 1.0, 5.0, 100.0};
  for (int i = 0; i < n_models; ++i) {
    const OptimalityModel m = verify_detail::random_model(rng);
    std::vector<Eigen::VectorXd> trials;
    for (int t = 0; t < 8; ++t)
      trials.push_back(verify_detail::random_categorical(rng, m.cmdp.n_contexts));
    for (double a : alphas)
      out.worst = std::max(out.worst, theorem1_residual_spread(m, a, trials));
  }
  out.pass = out.worst < out.tolerance;
  return out;
}

// Closed-form E-step distribution vs. the tempered posterior over a random
// (eta, alpha) grid.
inline VerifyCheck check_estep_closed_form(std::uint64_t seed = 202,
                                           int n_points = 27) {
  VerifyCheck out{"e-step-closed-form", 0.0, 1e-10, false};
  RngStream rng(seed);
  for (int i = 0; i < n_points; ++i) {
    OptimalityModel m = verify_detail::random_model(rng);
    m.eta = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    double alpha = rng.uniform(0.0, 5.0);
    if (i == 0) alpha = 0.0;
    if (i == 1) alpha = 100.0;
    out.worst = std::max(out.worst, theorem2_deviation(m, alpha));
  }
  out.pass = out.worst < out.tolerance;
  return out;
}

// The per-sample refit weights, multiplied by the sampling density and
// normalized, must reproduce the tempered posterior exactly: with one sample
// per context, w_k ∝ q*(c_k)/prior(c_k).
inline VerifyCheck check_variational_weights(std::uint64_t seed = 303,
                                             int n_models = 27) {
  VerifyCheck out{"variational-weights-match-posterior", 0.0, 1e-10, false};
  RngStream rng(seed);
  for (int i = 0; i < n_models; ++i) {
    OptimalityModel m = verify_detail::random_model(rng);
    double alpha = rng.uniform(0.0, 5.0);
    if (i == 0) alpha = 0.0;
    const int nc = m.cmdp.n_contexts;
    Eigen::VectorXd values(nc), log_nu(nc), log_mu(nc);
    for (int c = 0; c < nc; ++c) {
      values[c] = soft_value(m, c);
      log_nu[c] = std::log(m.prior[c]);
      log_mu[c] = std::log(m.target[c]);
    }
    const Eigen::VectorXd w = variational_weights(values, log_nu, log_mu, m.eta, alpha);
    Eigen::VectorXd q = (w.array() * m.prior.array()).matrix();
    q /= q.sum();
    const Eigen::VectorXd oracle = tempered_posterior(m, alpha);
    out.worst = std::max(out.worst, (q - oracle).cwiseAbs().maxCoeff());
  }
  out.pass = out.worst < out.tolerance;
  return out;
}

// Discounted value vs. the undiscounted value of the termination-augmented
// chain, both over the fixed horizon and at the infinite-horizon fixed point.
inline VerifyCheck check_discount_termination(std::uint64_t seed = 404,
                                              int n_models = 20) {
  VerifyCheck out{"discount-as-termination", 0.0, 1e-10, false};
  RngStream rng(seed);
  const double gammas[] = {0.0, 0.5, 0.8, 0.95};
  for (int i = 0; i < n_models; ++i) {
    const DiscreteCMDP m = verify_detail::random_cmdp(rng, 4, 2, 2, 6, 1.0);
    const Eigen::MatrixXd policy = verify_detail::random_simplex_rows(rng, 4, 2);
    const int context = rng.uniform_int(0, m.n_contexts - 1);
    for (double gamma : gammas) {
      const auto fin = discount_termination_check(m, policy, context, gamma);
      const auto inf = discount_termination_check_infinite(m, policy, context, gamma);
      out.worst = std::max(out.worst, std::abs(fin.first - fin.second));
      out.worst = std::max(out.worst, std::abs(inf.first - inf.second));
    }
  }
  out.pass = out.worst < out.tolerance;
  return out;
}

inline std::vector<VerifyCheck> verify_inference() {
  return {check_objective_residual(), check_estep_closed_form(),
          check_variational_weights(), check_discount_termination()};
}

}  // namespace spcrl
