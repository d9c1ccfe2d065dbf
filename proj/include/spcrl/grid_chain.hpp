#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "spcrl/env.hpp"

namespace spcrl {

// Minimal 1D corridor: walk from x=0 towards a context-given goal in [0,10]
// with per-step displacement clamped to +-1. Cheap smoke-test task for the
// curriculum machinery; no terminal states, fixed 25-step horizon.
class GridChainEnv final : public Env {
 public:
  static constexpr int kMaxSteps = 25;

  Eigen::Index obs_dim() const override { return 2; }
  Eigen::Index action_dim() const override { return 1; }
  Eigen::Index context_dim() const override { return 1; }

  Box context_box() const override {
    return Box{(Eigen::VectorXd(1) << 0.0).finished(),
               (Eigen::VectorXd(1) << 10.0).finished()};
  }

  int max_steps() const override { return kMaxSteps; }

  Eigen::VectorXd reset(const Eigen::VectorXd& context) override {
    goal_ = context[0];
    x_ = 0.0;
    return observe();
  }

  StepOut step(const Eigen::VectorXd& action) override {
    const double move = std::clamp(action[0], -1.0, 1.0);
    x_ = std::clamp(x_ + move, 0.0, 10.0);
    return StepOut{observe(), std::exp(-std::abs(x_ - goal_)), false};
  }

 private:
  Eigen::VectorXd observe() const {
    return (Eigen::VectorXd(2) << x_, goal_).finished();
  }

  double x_ = 0.0;
  double goal_ = 0.0;
};

}  // namespace spcrl
