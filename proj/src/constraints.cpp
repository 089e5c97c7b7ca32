#include "tcopt/constraints.hpp"

#include <cmath>
#include <stdexcept>

namespace tcopt {

namespace {

void merge_into(TaskSpec::Merged& merged, const Waypoint& wp) {
  if (wp.position) {
    for (int axis = 0; axis < 3; ++axis) {
      if (wp.mask[static_cast<size_t>(axis)]) {
        merged.mask[static_cast<size_t>(axis)] = true;
        merged.position[axis] = (*wp.position)[axis];
      }
    }
  }
  if (wp.rotation) {
    merged.rotation = *wp.rotation;
  }
}

}  // namespace

bool TaskSpec::Merged::empty() const {
  return !rotation && !mask[0] && !mask[1] && !mask[2];
}

TaskSpec::Merged TaskSpec::target_at(int t) const {
  Merged merged;
  for (const Waypoint& wp : waypoints) {
    if (wp.all) merge_into(merged, wp);
  }
  for (const Waypoint& wp : waypoints) {
    if (wp.t && *wp.t == t) merge_into(merged, wp);
  }
  if (t == horizon - 1) {
    for (const Waypoint& wp : waypoints) {
      if (wp.terminal) merge_into(merged, wp);
    }
  }
  return merged;
}

Vec SimpleFormConstraint::residual(const Vec& v, const Vec& w) const {
  if (v.size() != coeff_v.cols() || w.size() != coeff_w.cols()) {
    throw std::invalid_argument("slack size does not match constraint");
  }
  return coeff_v * v + coeff_w * w + offset;
}

ConstraintEvaluator::ConstraintEvaluator(
    KinematicChain chain, Eigen::Vector3d desired_position,
    std::array<bool, 3> mask, std::optional<Eigen::Matrix3d> desired_rotation)
    : chain_(std::move(chain)),
      desired_position_(std::move(desired_position)),
      desired_rotation_(std::move(desired_rotation)) {
  for (int axis = 0; axis < 3; ++axis) {
    if (mask[static_cast<size_t>(axis)]) position_axes_.push_back(axis);
  }
  if (position_axes_.empty() && !desired_rotation_) {
    throw std::invalid_argument("constraint evaluator with no rows");
  }
}

int ConstraintEvaluator::rows() const {
  return static_cast<int>(position_axes_.size()) + (desired_rotation_ ? 9 : 0);
}

Vec ConstraintEvaluator::residual(const Vec& v, const Vec& w) const {
  const Pose pose = generalized_forward_kinematics(chain_, v, w);
  Vec out(rows());
  int row = 0;
  for (int axis : position_axes_) {
    out[row++] = pose.position[axis] - desired_position_[axis];
  }
  if (desired_rotation_) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        out[row++] = pose.rotation(r, c) - (*desired_rotation_)(r, c);
      }
    }
  }
  return out;
}

AffineSlice extract_affine_slice(const ConstraintEvaluator& evaluator,
                                 const Vec& v, const Vec& w, int j) {
  if (j < 0 || j >= evaluator.joints()) {
    throw std::invalid_argument("joint index out of range");
  }
  Vec pv = v;
  Vec pw = w;
  pv[j] = 1.0;
  pw[j] = 0.0;
  const Vec f1 = evaluator.residual(pv, pw);
  pv[j] = -1.0;
  const Vec f2 = evaluator.residual(pv, pw);
  pv[j] = 0.0;
  pw[j] = 1.0;
  const Vec f3 = evaluator.residual(pv, pw);

  AffineSlice slice;
  // Exact for rows affine in (v_j, w_j).
  slice.g = 0.5 * (f1 - f2);
  slice.p = 0.5 * (f1 + f2);
  slice.h = f3 - slice.p;
  return slice;
}

SimpleFormConstraint compile_planar(const KinematicChain& chain,
                                    const TaskSpec& spec, int t) {
  if (!chain.is_planar()) {
    throw std::invalid_argument("compile_planar needs a planar chain");
  }
  if (!chain.base_pose().rotation.isIdentity(1e-12)) {
    throw std::invalid_argument("planar compilation assumes an unrotated base");
  }
  const TaskSpec::Merged target = spec.target_at(t);
  if (target.empty()) {
    throw std::invalid_argument("task spec has no entries at requested timestep");
  }
  if (target.mask[2]) {
    throw std::invalid_argument("planar chains carry no z position row");
  }

  const int m = chain.joints();
  const auto& lengths = chain.planar().link_lengths;
  int rows = 0;
  if (target.mask[0]) ++rows;
  if (target.mask[1]) ++rows;
  if (target.rotation) rows += 2;

  SimpleFormConstraint c;
  c.coeff_v = Mat::Zero(rows, m);
  c.coeff_w = Mat::Zero(rows, m);
  c.offset = Vec::Zero(rows);

  int row = 0;
  for (int axis = 0; axis < 2; ++axis) {
    if (!target.mask[static_cast<size_t>(axis)]) continue;
    Mat& coeff = (axis == 0) ? c.coeff_v : c.coeff_w;
    for (int j = 0; j < m; ++j) {
      coeff(row, j) = lengths[static_cast<size_t>(j)];
    }
    c.offset[row] = chain.base_pose().position[axis] - target.position[axis];
    ++row;
  }
  if (target.rotation) {
    // Heading rows: cos and sin of the cumulative angle pinned to phi.
    const double phi =
        std::atan2((*target.rotation)(1, 0), (*target.rotation)(0, 0));
    c.coeff_v(row, m - 1) = 1.0;
    c.offset[row] = -std::cos(phi);
    ++row;
    c.coeff_w(row, m - 1) = 1.0;
    c.offset[row] = -std::sin(phi);
    ++row;
  }
  return c;
}

ConstraintEvaluator compile_spatial(const KinematicChain& chain,
                                    const TaskSpec& spec, int t) {
  if (chain.is_planar()) {
    throw std::invalid_argument("compile_spatial needs a spatial chain");
  }
  const TaskSpec::Merged target = spec.target_at(t);
  if (target.empty()) {
    throw std::invalid_argument("task spec has no entries at requested timestep");
  }
  return ConstraintEvaluator(chain, target.position, target.mask,
                             target.rotation);
}

std::pair<Vec, Vec> slack_targets(const Mat& coupling, const Vec& q) {
  if (q.size() != coupling.cols()) {
    throw std::invalid_argument("joint vector size does not match coupling");
  }
  const Vec angles = coupling * q;
  return {angles.array().cos(), angles.array().sin()};
}

std::pair<Vec, Vec> slack_targets(const KinematicChain& chain, const Vec& q) {
  return slack_targets(cumulative_coupling_matrix(chain), q);
}

int constraint_rows(const TimestepConstraint& constraint) {
  if (const auto* simple = std::get_if<SimpleFormConstraint>(&constraint)) {
    return simple->rows();
  }
  return std::get<ConstraintEvaluator>(constraint).rows();
}

Vec constraint_residual(const TimestepConstraint& constraint, const Vec& v,
                        const Vec& w) {
  if (const auto* simple = std::get_if<SimpleFormConstraint>(&constraint)) {
    return simple->residual(v, w);
  }
  return std::get<ConstraintEvaluator>(constraint).residual(v, w);
}

}  // namespace tcopt
