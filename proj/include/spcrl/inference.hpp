#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spcrl/discrete_cmdp.hpp"

namespace spcrl {

inline double logsumexp(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf stays -inf
  return m + std::log((x.array() - m).exp().sum());
}

// KL between categoricals; p must have full support where it places mass.
inline double categorical_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    acc += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return acc;
}

// Exact-by-enumeration model of the optimality event on a discrete CMDP:
// the likelihood of "this episode was optimal" in context c is
// E_tau[exp(R(tau,c)/eta)], a softmax-style transform of the return. Context
// prior and target are categoricals over the finite context set.
struct OptimalityModel {
  DiscreteCMDP cmdp;
  Eigen::MatrixXd policy;      // n_states x n_actions
  Eigen::VectorXd prior;       // p_nu over contexts
  Eigen::VectorXd target;      // mu over contexts
  double eta = 1.0;

  void validate() const {
    cmdp.validate();
    if (prior.size() != cmdp.n_contexts || target.size() != cmdp.n_contexts)
      throw std::invalid_argument("OptimalityModel: prior/target size mismatch");
    if (std::abs(prior.sum() - 1.0) > 1e-9 || std::abs(target.sum() - 1.0) > 1e-9)
      throw std::invalid_argument("OptimalityModel: prior/target not normalized");
    if ((prior.array() <= 0.0).any() || (target.array() <= 0.0).any())
      throw std::invalid_argument("OptimalityModel: need full support");
    if (eta <= 0.0) throw std::invalid_argument("OptimalityModel: eta <= 0");
  }
};

// log p(O|c) = log sum_tau exp(R(tau,c)/eta) p(tau|c), by enumeration.
inline double log_optimality_likelihood(const OptimalityModel& m, int context) {
  const auto paths = enumerate_paths(m.cmdp, m.policy, context);
  Eigen::VectorXd terms(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i)
    terms[i] = paths[i].total_reward / m.eta + paths[i].log_prob;
  return logsumexp(terms);
}

inline Eigen::VectorXd log_likelihood_table(const OptimalityModel& m) {
  Eigen::VectorXd ll(m.cmdp.n_contexts);
  for (int c = 0; c < m.cmdp.n_contexts; ++c)
    ll[c] = log_optimality_likelihood(m, c);
  return ll;
}

// Soft episodic value V(c) = eta * log E_tau[exp(R/eta)].
inline double soft_value(const OptimalityModel& m, int context) {
  return m.eta * log_optimality_likelihood(m, context);
}

// Tempered posterior (1/Z) p(c|O)^{1/(1+alpha)} mu(c)^{alpha/(1+alpha)} where
// p(c|O) comes from the prior and the enumerated likelihoods.
inline Eigen::VectorXd tempered_posterior(const OptimalityModel& m, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("tempered_posterior: alpha < 0");
  const Eigen::VectorXd ll = log_likelihood_table(m);
  Eigen::VectorXd logq(m.cmdp.n_contexts);
  for (int c = 0; c < m.cmdp.n_contexts; ++c) {
    const double log_post = ll[c] + std::log(m.prior[c]);  // unnormalized
    logq[c] = (log_post + alpha * std::log(m.target[c])) / (1.0 + alpha);
  }
  const double z = logsumexp(logq);
  return (logq.array() - z).exp();
}

// Evaluates, for one trial distribution p over contexts,
//   g(p) = (1+alpha) KL(p||q*) + E_p[log p(O|c)] - KL(p||prior) - alpha KL(p||target).
// The bracketed part is the tempered-inference objective; the identity under
// test says g is independent of p, so the spread over trials should vanish.
inline double theorem1_residual_spread(const OptimalityModel& m, double alpha,
                                       const std::vector<Eigen::VectorXd>& trials) {
  if (trials.size() < 2)
    throw std::invalid_argument("theorem1_residual_spread: need >= 2 trials");
  for (const auto& p : trials) {
    if (p.size() != m.cmdp.n_contexts)
      throw std::invalid_argument("theorem1_residual_spread: trial size mismatch");
    if ((p.array() <= 0.0).any())
      throw std::invalid_argument("theorem1_residual_spread: zero-support trial");
  }
  const Eigen::VectorXd ll = log_likelihood_table(m);
  const Eigen::VectorXd qstar = tempered_posterior(m, alpha);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : trials) {
    const double objective = p.dot(ll) - categorical_kl(p, m.prior) -
                             alpha * categorical_kl(p, m.target);
    const double g = (1.0 + alpha) * categorical_kl(p, qstar) + objective;
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  return hi - lo;
}

// Closed-form regularized E-step distribution
//   q1(c) ∝ prior(c) exp((V(c) + eta*alpha*(log mu(c) - log prior(c))) / (eta + eta*alpha))
// against the tempered posterior computed independently; returns the max
// pointwise deviation.
inline double theorem2_deviation(const OptimalityModel& m, double alpha) {
  Eigen::VectorXd logq1(m.cmdp.n_contexts);
  for (int c = 0; c < m.cmdp.n_contexts; ++c) {
    const double v = soft_value(m, c);
    const double lprior = std::log(m.prior[c]);
    const double ltarget = std::log(m.target[c]);
    logq1[c] = lprior + (v + m.eta * alpha * (ltarget - lprior)) /
                            (m.eta + m.eta * alpha);
  }
  const Eigen::VectorXd q1 = (logq1.array() - logsumexp(logq1)).exp();
  const Eigen::VectorXd q2 = tempered_posterior(m, alpha);
  return (q1 - q2).cwiseAbs().maxCoeff();
}

// Discounting as termination: the discounted value of the original chain must
// equal the undiscounted value of an augmented chain that jumps to an
// absorbing zero-reward state with probability 1-gamma each step. Both sides
// are computed by the same generic DP on different inputs.
inline DiscreteCMDP augment_with_termination(const DiscreteCMDP& m, double gamma) {
  DiscreteCMDP out;
  out.n_states = m.n_states + 1;  // last index is the absorbing state
  out.n_actions = m.n_actions;
  out.n_contexts = m.n_contexts;
  out.horizon = m.horizon;
  out.gamma = 1.0;
  out.start_state = m.start_state;
  const int term = m.n_states;
  for (int c = 0; c < m.n_contexts; ++c) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(out.n_states * out.n_actions,
                                              out.n_states);
    for (int s = 0; s < m.n_states; ++s) {
      for (int a = 0; a < m.n_actions; ++a) {
        P.row(s * out.n_actions + a).head(m.n_states) =
            gamma * m.transition[c].row(s * m.n_actions + a);
        P(s * out.n_actions + a, term) = 1.0 - gamma;
      }
    }
    for (int a = 0; a < out.n_actions; ++a) P(term * out.n_actions + a, term) = 1.0;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(out.n_states, out.n_actions);
    R.topRows(m.n_states) = m.reward[c];
    out.transition.push_back(std::move(P));
    out.reward.push_back(std::move(R));
  }
  out.validate();
  return out;
}

inline std::pair<double, double> discount_termination_check(
    const DiscreteCMDP& m, const Eigen::MatrixXd& policy, int context,
    double gamma) {
  DiscreteCMDP discounted = m;
  discounted.gamma = gamma;
  const double direct = finite_horizon_value(discounted, policy, context);

  const DiscreteCMDP augmented = augment_with_termination(m, gamma);
  Eigen::MatrixXd policy_aug(augmented.n_states, augmented.n_actions);
  policy_aug.topRows(m.n_states) = policy;
  policy_aug.row(m.n_states).setZero();
  policy_aug(m.n_states, 0) = 1.0;  // arbitrary action in the absorbing state
  const double via_termination = finite_horizon_value(augmented, policy_aug, context);
  return {direct, via_termination};
}

// Same comparison over the infinite horizon: discounted linear solve on the
// original chain vs. an undiscounted solve restricted to the transient block
// of the augmented chain (the absorbing state has value 0).
inline std::pair<double, double> discount_termination_check_infinite(
    const DiscreteCMDP& m, const Eigen::MatrixXd& policy, int context,
    double gamma) {
  DiscreteCMDP discounted = m;
  discounted.gamma = gamma;
  const double direct = infinite_horizon_value(discounted, policy, context);

  const DiscreteCMDP aug = augment_with_termination(m, gamma);
  const int n = m.n_states;
  Eigen::MatrixXd P_tt = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r_t = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m.n_actions; ++a) {
      P_tt.row(s) +=
          policy(s, a) * aug.transition[context].row(s * aug.n_actions + a).head(n);
      r_t[s] += policy(s, a) * aug.reward[context](s, a);
    }
  }
  const Eigen::VectorXd v =
      (Eigen::MatrixXd::Identity(n, n) - P_tt).partialPivLu().solve(r_t);
  return {direct, v[m.start_state]};
}

}  // namespace spcrl
