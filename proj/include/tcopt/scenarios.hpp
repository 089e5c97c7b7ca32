#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tcopt/constraints.hpp"
#include "tcopt/kinematics.hpp"
#include "tcopt/solver.hpp"
#include "tcopt/types.hpp"

namespace tcopt {

enum class CirclePlane { xy, yz };

/// count equally spaced points on the circle, starting at angle 0. The
/// first point doubles as the closure target when a horizon wraps around.
std::vector<Eigen::Vector3d> circle_waypoints(const Eigen::Vector3d& center,
                                              double radius, CirclePlane plane,
                                              int count);

/// Two planar arms joined at their last links, which face fixed opposing
/// headings so the coupled links coincide.
struct ClosedChainSpec {
  KinematicChain arm1;
  KinematicChain arm2;
  double heading1 = 0.0;
  double heading2 = 3.14159265358979323846;
  std::optional<Eigen::Vector2d> terminal_goal;  // arm 1 end effector
  int horizon = 0;
};

/// Rows over the stacked slack vector of both arms: end-effector equality
/// (2 rows), per-arm heading pins (4 rows), and the terminal goal rows of
/// arm 1 at the last timestep.
SimpleFormConstraint loop_closure_rows(const ClosedChainSpec& spec, int t);

struct CyclicityReport {
  double position_gap = 0.0;  // l1 gap between first and last configuration
  double velocity_gap = 0.0;  // l1 gap between first and last forward-difference velocity
};

CyclicityReport cyclicity_gap(const Trajectory& trajectory);

/// A ready-to-solve benchmark instance.
struct Scenario {
  std::string id;
  std::string description;
  std::vector<KinematicChain> chains;
  int n = 0;
  double dt = 0.1;
  bool cyclic = false;
  std::optional<Vec> pin_start;
  LiftedProblem problem;
  std::optional<Eigen::Vector3d> goal_position;
  std::optional<Eigen::Matrix3d> orientation_target;
  std::optional<double> plane_x;
};

/// Optional knobs; anything unset falls back to the shipped defaults
/// (chosen values, see README). app3..app5 require a spatial chain.
struct ScenarioOverrides {
  std::optional<int> n;
  std::optional<double> dt;
  std::optional<std::vector<double>> link_lengths;
  std::optional<Vec> q_max;
  std::optional<KinematicChain> spatial_chain;
  std::optional<Eigen::Vector3d> circle_center;
  std::optional<double> circle_radius;
  std::optional<Eigen::Vector3d> second_base;
  std::optional<Eigen::Vector3d> goal_position;
  std::optional<Vec> start_config;
  std::optional<Eigen::Vector3d> orientation_rpy;
  std::optional<double> plane_x;
};

/// Builds one of app1..app5:
///   app1  planar 6-dof circle with horizontal last link
///   app2  dual-arm closed chain, point to point
///   app3  spatial 7-dof circle in the Y-Z plane, fixed orientation
///   app4  point to point on a fixed-X plane with fixed orientation
///   app5  point to point with fixed orientation only
Scenario build_application(const std::string& id,
                           const ScenarioOverrides& overrides = {});

/// Starting trajectory for a scenario: the pinned start when present,
/// otherwise a feasibility pass on the first timestep's constraint
/// (alternating projections for simple-form rows, a short three-step solve
/// for general-form rows), replicated across the horizon. Starting every
/// timestep from one constraint-satisfying configuration keeps the
/// per-timestep iterations in the same solution branch; from zeros they
/// scatter across branches and the trajectory cannot come out smooth.
Mat initial_trajectory(const Scenario& scenario);

// Metric helpers for realized trajectories.
double max_orientation_residual(const KinematicChain& chain,
                                const Eigen::Matrix3d& desired, const Mat& q);
double max_axis_residual(const KinematicChain& chain, int axis, double value,
                         const Mat& q);
double terminal_position_error(const KinematicChain& chain,
                               const Eigen::Vector3d& goal, const Mat& q);

}  // namespace tcopt
