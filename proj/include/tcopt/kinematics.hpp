#pragma once

#include <variant>
#include <vector>

#include "tcopt/types.hpp"

namespace tcopt {

/// Planar revolute chain; link j rotates by q_j and extends link_lengths[j]
/// along its local x axis. Poses live in 3D with z = 0.
struct PlanarChain {
  std::vector<double> link_lengths;
};

/// One standard (distal) Denavit-Hartenberg row:
///   T_j = RotZ(q_j + theta_offset) * TransZ(d) * TransX(a) * RotX(alpha)
struct DHRow {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
};

struct SpatialDHChain {
  std::vector<DHRow> rows;
};

/// A serial chain plus its symmetric joint limits and base transform.
class KinematicChain {
 public:
  KinematicChain(PlanarChain model, Vec q_max, Pose base = {});
  KinematicChain(SpatialDHChain model, Vec q_max, Pose base = {});

  int joints() const { return joints_; }
  bool is_planar() const;
  const PlanarChain& planar() const;
  const SpatialDHChain& spatial() const;
  const Vec& q_max() const { return q_max_; }
  const Pose& base_pose() const { return base_pose_; }

 private:
  std::variant<PlanarChain, SpatialDHChain> model_;
  Vec q_max_;
  Pose base_pose_;
  int joints_ = 0;
};

/// End-effector pose at joint angles q (pure evaluation, limits not checked).
Pose forward_kinematics(const KinematicChain& chain, const Vec& q);

/// Evaluates the transform product with cos(q_j) replaced by v_j and
/// sin(q_j) by w_j. On the unit circle (v = cos q, w = sin q) this equals
/// forward_kinematics; elsewhere the result is the multilinear extension,
/// affine in each (v_j, w_j) pair with the other pairs held fixed.
Pose generalized_forward_kinematics(const KinematicChain& chain, const Vec& v,
                                    const Vec& w);

/// Constant matrix A mapping q to the stacked angles whose cos/sin are
/// lifted: prefix-sum rows for planar chains, the identity for spatial ones.
Mat cumulative_coupling_matrix(const KinematicChain& chain);

/// Rotation composed intrinsically about X, then Y, then Z.
Eigen::Matrix3d rotation_xyz(double alpha, double beta, double gamma);

}  // namespace tcopt
