#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>

#include "spcrl/gaussian.hpp"

namespace spcrl {

struct StepOut {
  Eigen::VectorXd obs;
  double reward = 0.0;
  bool terminal = false;
};

// Episodic task parameterized by a context vector. Observations are the raw
// state with the context appended, so one policy network serves all contexts.
class Env {
 public:
  virtual ~Env() = default;

  virtual Eigen::Index obs_dim() const = 0;
  virtual Eigen::Index action_dim() const = 0;
  virtual Eigen::Index context_dim() const = 0;
  virtual Box context_box() const = 0;
  virtual int max_steps() const = 0;

  virtual Eigen::VectorXd reset(const Eigen::VectorXd& context) = 0;
  virtual StepOut step(const Eigen::VectorXd& action) = 0;
};

}  // namespace spcrl
