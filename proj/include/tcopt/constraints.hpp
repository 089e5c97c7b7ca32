#pragma once

#include <array>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "tcopt/kinematics.hpp"
#include "tcopt/types.hpp"

namespace tcopt {

/// One task entry: a desired position (per-axis mask) and/or a desired
/// rotation, attached to a single timestep, to every timestep, or to the
/// final one.
struct Waypoint {
  std::optional<int> t;
  bool all = false;
  bool terminal = false;
  std::optional<Eigen::Vector3d> position;
  std::array<bool, 3> mask = {true, true, true};
  std::optional<Eigen::Matrix3d> rotation;
};

/// Per-timestep task description over a horizon of n timesteps.
struct TaskSpec {
  std::vector<Waypoint> waypoints;
  int horizon = 0;

  /// Entries merged for timestep t: "all" entries first, then t-specific,
  /// then terminal ones; later entries override per axis / rotation.
  struct Merged {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    std::array<bool, 3> mask = {false, false, false};
    std::optional<Eigen::Matrix3d> rotation;
    bool empty() const;
  };
  Merged target_at(int t) const;
};

/// Constraint rows affine in the lifted slack vector:
///   residual(v, w) = coeff_v * v + coeff_w * w + offset
struct SimpleFormConstraint {
  Mat coeff_v;
  Mat coeff_w;
  Vec offset;

  int rows() const { return static_cast<int>(offset.size()); }
  int lifted() const { return static_cast<int>(coeff_v.cols()); }
  Vec residual(const Vec& v, const Vec& w) const;
};

/// Constraint rows evaluated through the generalized forward kinematics:
/// masked position components first, then the nine rotation elements in
/// row-major order. Affine in each per-joint slack pair.
class ConstraintEvaluator {
 public:
  ConstraintEvaluator(KinematicChain chain, Eigen::Vector3d desired_position,
                      std::array<bool, 3> mask,
                      std::optional<Eigen::Matrix3d> desired_rotation);

  int rows() const;
  int joints() const { return chain_.joints(); }
  const KinematicChain& chain() const { return chain_; }

  Vec residual(const Vec& v, const Vec& w) const;

 private:
  KinematicChain chain_;
  Eigen::Vector3d desired_position_;
  std::vector<int> position_axes_;
  std::optional<Eigen::Matrix3d> desired_rotation_;
};

/// Per-row coefficients of one joint's slack pair: row value is
/// g * v_j + h * w_j + p with the other pairs frozen.
struct AffineSlice {
  Vec g;
  Vec h;
  Vec p;
};

/// Extracts the slice for joint j at the given slack state by the exact
/// three-point rule (evaluations at (1,0), (-1,0), (0,1)).
AffineSlice extract_affine_slice(const ConstraintEvaluator& evaluator,
                                 const Vec& v, const Vec& w, int j);

/// Compiles the timestep-t target of a planar chain into simple-form rows:
/// masked x/y positions plus, when a rotation is present, two rows pinning
/// the cumulative heading.
SimpleFormConstraint compile_planar(const KinematicChain& chain,
                                    const TaskSpec& spec, int t);

/// Compiles the timestep-t target of a spatial chain into an evaluator.
ConstraintEvaluator compile_spatial(const KinematicChain& chain,
                                    const TaskSpec& spec, int t);

/// Slack values realized by joint angles q: (cos(Aq), sin(Aq)).
std::pair<Vec, Vec> slack_targets(const Mat& coupling, const Vec& q);
std::pair<Vec, Vec> slack_targets(const KinematicChain& chain, const Vec& q);

/// A timestep constraint is either globally affine (simple form) or affine
/// per joint pair (general form).
using TimestepConstraint = std::variant<SimpleFormConstraint, ConstraintEvaluator>;

int constraint_rows(const TimestepConstraint& constraint);
Vec constraint_residual(const TimestepConstraint& constraint, const Vec& v,
                        const Vec& w);

}  // namespace tcopt
