#include "tcopt/kinematics.hpp"

#include <cmath>
#include <stdexcept>

namespace tcopt {

namespace {

void check_limits(const Vec& q_max, int m) {
  if (q_max.size() != m) {
    throw std::invalid_argument("q_max size does not match joint count");
  }
  if ((q_max.array() <= 0.0).any()) {
    throw std::invalid_argument("q_max must be strictly positive");
  }
}

// DH transform with the joint rotation given as a (cos, sin) pair so the
// same kernel serves angle and slack evaluation.
Eigen::Matrix4d dh_transform(const DHRow& row, double c, double s) {
  const double ca = std::cos(row.alpha);
  const double sa = std::sin(row.alpha);
  Eigen::Matrix4d T;
  T << c, -s * ca, s * sa, row.a * c,
      s, c * ca, -c * sa, row.a * s,
      0.0, sa, ca, row.d,
      0.0, 0.0, 0.0, 1.0;
  return T;
}

Eigen::Matrix4d pose_to_matrix(const Pose& pose) {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = pose.rotation;
  T.topRightCorner<3, 1>() = pose.position;
  return T;
}

Pose matrix_to_pose(const Eigen::Matrix4d& T) {
  Pose pose;
  pose.rotation = T.topLeftCorner<3, 3>();
  pose.position = T.topRightCorner<3, 1>();
  return pose;
}

// Planar transforms are 2D homogeneous; (c, s) is the joint rotation.
Eigen::Matrix3d planar_link_transform(double length, double c, double s) {
  Eigen::Matrix3d T;
  T << c, -s, length * c,
      s, c, length * s,
      0.0, 0.0, 1.0;
  return T;
}

Pose planar_product(const KinematicChain& chain, const Vec& c, const Vec& s) {
  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  const auto& lengths = chain.planar().link_lengths;
  for (int j = 0; j < chain.joints(); ++j) {
    T = T * planar_link_transform(lengths[static_cast<size_t>(j)], c[j], s[j]);
  }
  Pose local;
  local.position = Eigen::Vector3d(T(0, 2), T(1, 2), 0.0);
  local.rotation = Eigen::Matrix3d::Identity();
  local.rotation.topLeftCorner<2, 2>() = T.topLeftCorner<2, 2>();
  const Pose& base = chain.base_pose();
  Pose out;
  out.position = base.position + base.rotation * local.position;
  out.rotation = base.rotation * local.rotation;
  return out;
}

Pose spatial_product(const KinematicChain& chain, const Vec& c, const Vec& s) {
  Eigen::Matrix4d T = pose_to_matrix(chain.base_pose());
  const auto& rows = chain.spatial().rows;
  for (int j = 0; j < chain.joints(); ++j) {
    const DHRow& row = rows[static_cast<size_t>(j)];
    const double co = std::cos(row.theta_offset);
    const double so = std::sin(row.theta_offset);
    // cos/sin of (q_j + offset) expanded so the entries stay affine in
    // the per-joint (c_j, s_j) pair.
    const double ce = c[j] * co - s[j] * so;
    const double se = s[j] * co + c[j] * so;
    T = T * dh_transform(row, ce, se);
  }
  return matrix_to_pose(T);
}

}  // namespace

KinematicChain::KinematicChain(PlanarChain model, Vec q_max, Pose base)
    : model_(std::move(model)), q_max_(std::move(q_max)), base_pose_(base) {
  const auto& planar = std::get<PlanarChain>(model_);
  joints_ = static_cast<int>(planar.link_lengths.size());
  if (joints_ < 1) {
    throw std::invalid_argument("planar chain needs at least one link");
  }
  for (double length : planar.link_lengths) {
    if (length <= 0.0) {
      throw std::invalid_argument("planar link lengths must be positive");
    }
  }
  check_limits(q_max_, joints_);
}

KinematicChain::KinematicChain(SpatialDHChain model, Vec q_max, Pose base)
    : model_(std::move(model)), q_max_(std::move(q_max)), base_pose_(base) {
  joints_ = static_cast<int>(std::get<SpatialDHChain>(model_).rows.size());
  if (joints_ < 1) {
    throw std::invalid_argument("spatial chain needs at least one DH row");
  }
  check_limits(q_max_, joints_);
}

bool KinematicChain::is_planar() const {
  return std::holds_alternative<PlanarChain>(model_);
}

const PlanarChain& KinematicChain::planar() const {
  return std::get<PlanarChain>(model_);
}

const SpatialDHChain& KinematicChain::spatial() const {
  return std::get<SpatialDHChain>(model_);
}

Pose forward_kinematics(const KinematicChain& chain, const Vec& q) {
  if (q.size() != chain.joints()) {
    throw std::invalid_argument("joint vector size does not match chain");
  }
  if (chain.is_planar()) {
    // Sum of per-link vectors at cumulative angles.
    const auto& lengths = chain.planar().link_lengths;
    double angle = 0.0;
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    for (int j = 0; j < chain.joints(); ++j) {
      angle += q[j];
      pos.x() += lengths[static_cast<size_t>(j)] * std::cos(angle);
      pos.y() += lengths[static_cast<size_t>(j)] * std::sin(angle);
    }
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    rot(0, 0) = std::cos(angle);
    rot(0, 1) = -std::sin(angle);
    rot(1, 0) = std::sin(angle);
    rot(1, 1) = std::cos(angle);
    const Pose& base = chain.base_pose();
    Pose out;
    out.position = base.position + base.rotation * pos;
    out.rotation = base.rotation * rot;
    return out;
  }
  Vec c(q.size()), s(q.size());
  for (int j = 0; j < q.size(); ++j) {
    const double offset = chain.spatial().rows[static_cast<size_t>(j)].theta_offset;
    c[j] = std::cos(q[j] + offset);
    s[j] = std::sin(q[j] + offset);
  }
  // Reuse the product kernel with offsets already folded in.
  Eigen::Matrix4d T = pose_to_matrix(chain.base_pose());
  for (int j = 0; j < chain.joints(); ++j) {
    T = T * dh_transform(chain.spatial().rows[static_cast<size_t>(j)], c[j], s[j]);
  }
  return matrix_to_pose(T);
}

Pose generalized_forward_kinematics(const KinematicChain& chain, const Vec& v,
                                    const Vec& w) {
  if (v.size() != chain.joints() || w.size() != chain.joints()) {
    throw std::invalid_argument("slack vector size does not match chain");
  }
  return chain.is_planar() ? planar_product(chain, v, w)
                           : spatial_product(chain, v, w);
}

Mat cumulative_coupling_matrix(const KinematicChain& chain) {
  const int m = chain.joints();
  if (chain.is_planar()) {
    Mat A = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      A.row(i).head(i + 1).setOnes();
    }
    return A;
  }
  return Mat::Identity(m, m);
}

Eigen::Matrix3d rotation_xyz(double alpha, double beta, double gamma) {
  return (Eigen::AngleAxisd(alpha, Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(beta, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(gamma, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

}  // namespace tcopt
