#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "spcrl/grid_chain.hpp"
#include "spcrl/point_mass.hpp"

namespace spcrl {

inline std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "pointmass2d") return std::make_unique<PointMassEnv>(false);
  if (name == "pointmass3d") return std::make_unique<PointMassEnv>(true);
  if (name == "gridchain") return std::make_unique<GridChainEnv>();
  throw std::invalid_argument("unknown env: " + name);
}

}  // namespace spcrl
