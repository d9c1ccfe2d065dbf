#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace spcrl {

struct GaeOut {
  Eigen::VectorXd advantages;
  Eigen::VectorXd targets;  // advantage + value, regression target for V
};

// Generalized advantage estimation over one episode. `values` carries one
// extra entry: the bootstrap value of the state after the last step (zero at
// episode ends, whether terminal or truncated at the step limit).
inline GaeOut gae_advantages(const Eigen::VectorXd& rewards,
                             const Eigen::VectorXd& values, double gamma,
                             double lam) {
  const Eigen::Index t_max = rewards.size();
  if (values.size() != t_max + 1)
    throw std::invalid_argument("gae_advantages: need len(values) == len(rewards)+1");
  GaeOut out;
  out.advantages.resize(t_max);
  out.targets.resize(t_max);
  double acc = 0.0;
  for (Eigen::Index t = t_max - 1; t >= 0; --t) {
    const double delta = rewards[t] + gamma * values[t + 1] - values[t];
    acc = delta + gamma * lam * acc;
    out.advantages[t] = acc;
    out.targets[t] = acc + values[t];
  }
  return out;
}

}  // namespace spcrl
