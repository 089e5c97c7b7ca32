#pragma once

#include <Eigen/Dense>

namespace tcopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Rigid transform of the end effector (or a chain base).
///
/// `rotation` is orthonormal when the pose was evaluated at actual joint
/// angles. Poses evaluated at lifted slack variables may carry an
/// off-circle linear blend and make no orthonormality promise.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

}  // namespace tcopt
