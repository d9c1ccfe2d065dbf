#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spcrl/env.hpp"

namespace spcrl {

struct Trajectory {
  std::vector<Eigen::VectorXd> obs;      // length() + 1 entries, final obs last
  std::vector<Eigen::VectorXd> actions;  // one per step
  std::vector<double> rewards;
  bool terminated = false;  // env signalled terminal (vs. hitting the step limit)

  int length() const { return static_cast<int>(rewards.size()); }

  double total_reward() const {
    double acc = 0.0;
    for (double r : rewards) acc += r;
    return acc;
  }

  double discounted_return(double gamma) const {
    double acc = 0.0, g = 1.0;
    for (double r : rewards) {
      acc += g * r;
      g *= gamma;
    }
    return acc;
  }
};

// policy: obs -> action. Stochastic policies capture their own rng.
template <typename Policy>
Trajectory run_episode(Env& env, Policy&& policy, const Eigen::VectorXd& context,
                       int max_steps) {
  Trajectory traj;
  Eigen::VectorXd obs = env.reset(context);
  traj.obs.push_back(obs);
  for (int t = 0; t < max_steps; ++t) {
    Eigen::VectorXd a = policy(obs);
    StepOut out = env.step(a);
    traj.actions.push_back(std::move(a));
    traj.rewards.push_back(out.reward);
    traj.obs.push_back(out.obs);
    obs = out.obs;
    if (out.terminal) {
      traj.terminated = true;
      break;
    }
  }
  return traj;
}

}  // namespace spcrl
