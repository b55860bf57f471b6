// Shared aliases and the state bundle passed between integrators.
#pragma once

#include <Eigen/Dense>

#include "cdyn/errors.hpp"

namespace cdyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

// Full dynamic state of a mechanical system at one time instant.  lambda and
// p keep the most recent bilateral multiplier (force units) and unilateral
// impulse so trajectory output and warm starts have somewhere to live; they
// are empty for systems without the corresponding constraints.
struct SystemState {
  double t = 0.0;
  Vec q;
  Vec v;
  Vec lambda;  // size n_lambda, force units
  Vec p;       // size n_u, impulse units (last accepted step)
};

}  // namespace cdyn
