#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "spcrl/env.hpp"

namespace spcrl {

// Point mass steered through a gate in a wall at y=0 towards a goal below.
// State [x, vx, y, vy]; context [gate_pos, gate_width, friction] (friction
// dropped in the 2D variant). Forces are clamped to +-10, positions to +-4.

namespace pm {

constexpr double kDt = 0.05;
constexpr double kForceLimit = 10.0;
constexpr double kPosLimit = 4.0;
constexpr int kMaxSteps = 100;
constexpr double kGamma = 0.95;
inline const Eigen::Vector2d kGoal{0.0, -3.0};
inline const Eigen::Vector4d kStartState{0.0, 0.0, 3.0, 0.0};

struct StepResult {
  Eigen::Vector4d next_state;
  double reward = 0.0;
  bool terminal = false;
  bool crash = false;
};

inline double reward_at(const Eigen::Vector4d& s) {
  const double dx = kGoal[0] - s[0];
  const double dy = kGoal[1] - s[2];
  return std::exp(-0.6 * std::sqrt(dx * dx + dy * dy));
}

// One explicit-Euler step. The wall test interpolates the crossing point
// within the step so a fast particle cannot tunnel through.
inline StepResult step(const Eigen::Vector4d& s, const Eigen::Vector2d& action,
                       double gate_pos, double gate_width, double friction,
                       double dt = kDt, double force_limit = kForceLimit) {
  const double fx = std::clamp(action[0], -force_limit, force_limit);
  const double fy = std::clamp(action[1], -force_limit, force_limit);

  const double x = s[0], vx = s[1], y = s[2], vy = s[3];
  double nx = x + dt * vx;
  const double nvx = vx + dt * (fx - friction * vx);
  double ny = y + dt * vy;
  const double nvy = vy + dt * (fy - friction * vy);

  StepResult out;
  if ((y > 0.0) != (ny > 0.0)) {
    const double frac = y / (y - ny);  // position of y=0 within the step
    const double x_cross = x + frac * (nx - x);
    const double half = 0.5 * gate_width;
    if (x_cross < gate_pos - half || x_cross > gate_pos + half) {
      out.crash = true;
      out.terminal = true;
    }
  }

  nx = std::clamp(nx, -kPosLimit, kPosLimit);
  ny = std::clamp(ny, -kPosLimit, kPosLimit);
  out.next_state << nx, nvx, ny, nvy;
  out.reward = reward_at(out.next_state);
  return out;
}

}  // namespace pm

// Env adapter; three_d selects the [gate_pos, gate_width, friction] context,
// otherwise [gate_pos, gate_width] with friction pinned to zero.
class PointMassEnv final : public Env {
 public:
  explicit PointMassEnv(bool three_d, double dt = pm::kDt,
                        double force_limit = pm::kForceLimit)
      : three_d_(three_d), dt_(dt), force_limit_(force_limit) {}

  Eigen::Index obs_dim() const override { return 4 + context_dim(); }
  Eigen::Index action_dim() const override { return 2; }
  Eigen::Index context_dim() const override { return three_d_ ? 3 : 2; }

  Box context_box() const override {
    if (three_d_) {
      return Box{(Eigen::VectorXd(3) << -4.0, 0.5, 0.0).finished(),
                 (Eigen::VectorXd(3) << 4.0, 8.0, 4.0).finished()};
    }
    return Box{(Eigen::VectorXd(2) << -4.0, 0.5).finished(),
               (Eigen::VectorXd(2) << 4.0, 8.0).finished()};
  }

  int max_steps() const override { return pm::kMaxSteps; }

  Eigen::VectorXd reset(const Eigen::VectorXd& context) override {
    context_ = context;
    state_ = pm::kStartState;
    return observe();
  }

  StepOut step(const Eigen::VectorXd& action) override {
    const double friction = three_d_ ? context_[2] : 0.0;
    const pm::StepResult r = pm::step(state_, Eigen::Vector2d(action[0], action[1]),
                                      context_[0], context_[1], friction,
                                      dt_, force_limit_);
    state_ = r.next_state;
    return StepOut{observe(), r.reward, r.terminal};
  }

 private:
  Eigen::VectorXd observe() const {
    Eigen::VectorXd obs(obs_dim());
    obs << state_, context_;
    return obs;
  }

  bool three_d_;
  double dt_;
  double force_limit_;
  Eigen::VectorXd context_;
  Eigen::Vector4d state_ = pm::kStartState;
};

}  // namespace spcrl
