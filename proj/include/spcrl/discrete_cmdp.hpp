#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace spcrl {

// Small finite-context MDP family with everything tabulated, so likelihoods,
// posteriors and values can be computed exactly by enumeration or DP. Sizes
// are meant to stay tiny (horizon <= ~6, a few states/actions/contexts).
struct DiscreteCMDP {
  int n_states = 0;
  int n_actions = 0;
  int n_contexts = 0;
  int horizon = 0;
  double gamma = 1.0;
  int start_state = 0;

  // transition[c] is (n_states*n_actions) x n_states, row index s*n_actions+a.
  std::vector<Eigen::MatrixXd> transition;
  // reward[c] is n_states x n_actions.
  std::vector<Eigen::MatrixXd> reward;

  void validate() const {
    if (static_cast<int>(transition.size()) != n_contexts ||
        static_cast<int>(reward.size()) != n_contexts)
      throw std::invalid_argument("DiscreteCMDP: table count != n_contexts");
    for (const auto& t : transition) {
      if (t.rows() != n_states * n_actions || t.cols() != n_states)
        throw std::invalid_argument("DiscreteCMDP: bad transition shape");
      for (Eigen::Index r = 0; r < t.rows(); ++r) {
        if (std::abs(t.row(r).sum() - 1.0) > 1e-9)
          throw std::invalid_argument("DiscreteCMDP: transition row not normalized");
        if ((t.row(r).array() < 0.0).any())
          throw std::invalid_argument("DiscreteCMDP: negative transition prob");
      }
    }
  }
};

// One enumerated trajectory: the visited states (horizon+1 of them), the
// actions, the log of its probability under policy x dynamics, and both
// return conventions.
struct PathOutcome {
  std::vector<int> states;
  std::vector<int> actions;
  double log_prob = 0.0;
  double total_reward = 0.0;       // undiscounted sum over the horizon
  double discounted_return = 0.0;  // sum of gamma^t r_t
};

// Exhaustively enumerates all positive-probability trajectories of the fixed
// horizon under a stationary policy table (n_states x n_actions, rows on the
// simplex). Throws if the trajectory count exceeds the budget.
inline std::vector<PathOutcome> enumerate_paths(const DiscreteCMDP& m,
                                                const Eigen::MatrixXd& policy,
                                                int context,
                                                std::size_t budget = 200000) {
  if (context < 0 || context >= m.n_contexts)
    throw std::invalid_argument("enumerate_paths: context out of range");
  const Eigen::MatrixXd& P = m.transition[context];
  const Eigen::MatrixXd& R = m.reward[context];

  std::vector<PathOutcome> out;
  PathOutcome cur;
  cur.states.push_back(m.start_state);

  // Depth-first over (action, next-state) branches with zero-prob pruning.
  auto recurse = [&](auto&& self, int depth, double log_p, double tot,
                     double disc, double g) -> void {
    if (depth == m.horizon) {
      PathOutcome done = cur;
      done.log_prob = log_p;
      done.total_reward = tot;
      done.discounted_return = disc;
      out.push_back(std::move(done));
      if (out.size() > budget)
        throw std::runtime_error("enumerate_paths: budget exceeded");
      return;
    }
    const int s = cur.states.back();
    for (int a = 0; a < m.n_actions; ++a) {
      const double pa = policy(s, a);
      if (pa <= 0.0) continue;
      const double r = R(s, a);
      for (int s2 = 0; s2 < m.n_states; ++s2) {
        const double pt = P(s * m.n_actions + a, s2);
        if (pt <= 0.0) continue;
        cur.actions.push_back(a);
        cur.states.push_back(s2);
        self(self, depth + 1, log_p + std::log(pa) + std::log(pt), tot + r,
             disc + g * r, g * m.gamma);
        cur.states.pop_back();
        cur.actions.pop_back();
      }
    }
  };
  recurse(recurse, 0, 0.0, 0.0, 0.0, 1.0);
  return out;
}

// Exact E[sum_{t<T} gamma^t r_t] from the start state by backward induction.
inline double finite_horizon_value(const DiscreteCMDP& m,
                                   const Eigen::MatrixXd& policy, int context) {
  const Eigen::MatrixXd& P = m.transition[context];
  const Eigen::MatrixXd& R = m.reward[context];
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.n_states);
  for (int t = m.horizon - 1; t >= 0; --t) {
    Eigen::VectorXd nv(m.n_states);
    for (int s = 0; s < m.n_states; ++s) {
      double acc = 0.0;
      for (int a = 0; a < m.n_actions; ++a) {
        const double pa = policy(s, a);
        if (pa == 0.0) continue;
        acc += pa * (R(s, a) + m.gamma * P.row(s * m.n_actions + a).dot(v));
      }
      nv[s] = acc;
    }
    v = nv;
  }
  return v[m.start_state];
}

// Infinite-horizon discounted value by solving (I - gamma P_pi) v = r_pi.
inline double infinite_horizon_value(const DiscreteCMDP& m,
                                     const Eigen::MatrixXd& policy, int context) {
  if (m.gamma >= 1.0)
    throw std::invalid_argument("infinite_horizon_value: needs gamma < 1");
  const Eigen::MatrixXd& P = m.transition[context];
  const Eigen::MatrixXd& R = m.reward[context];
  Eigen::MatrixXd P_pi = Eigen::MatrixXd::Zero(m.n_states, m.n_states);
  Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(m.n_states);
  for (int s = 0; s < m.n_states; ++s) {
    for (int a = 0; a < m.n_actions; ++a) {
      P_pi.row(s) += policy(s, a) * P.row(s * m.n_actions + a);
      r_pi[s] += policy(s, a) * R(s, a);
    }
  }
  const Eigen::MatrixXd A =
      Eigen::MatrixXd::Identity(m.n_states, m.n_states) - m.gamma * P_pi;
  const Eigen::VectorXd v = A.partialPivLu().solve(r_pi);
  return v[m.start_state];
}

}  // namespace spcrl
