#include "tcopt/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tcopt {

namespace {

constexpr double kPi = std::numbers::pi;

Vec uniform_limits(int m, double value) { return Vec::Constant(m, value); }

KinematicChain default_planar_arm(const ScenarioOverrides& o,
                                  const Eigen::Vector3d& base_position) {
  std::vector<double> lengths =
      o.link_lengths ? *o.link_lengths : std::vector<double>(6, 1.0);
  Vec q_max = o.q_max ? *o.q_max
                      : uniform_limits(static_cast<int>(lengths.size()), kPi);
  Pose base;
  base.position = base_position;
  return KinematicChain(PlanarChain{std::move(lengths)}, std::move(q_max), base);
}

const KinematicChain& require_spatial(const ScenarioOverrides& o,
                                      const std::string& id) {
  if (!o.spatial_chain || o.spatial_chain->is_planar()) {
    throw std::invalid_argument(id + " needs a spatial chain (see configs/)");
  }
  return *o.spatial_chain;
}

// Per-timestep circle targets closed over the horizon: the last timestep
// repeats the first target exactly.
std::vector<Eigen::Vector3d> closed_circle_targets(const Eigen::Vector3d& center,
                                                   double radius,
                                                   CirclePlane plane, int n) {
  std::vector<Eigen::Vector3d> points =
      circle_waypoints(center, radius, plane, n - 1);
  points.push_back(points.front());
  return points;
}

LiftedProblem compile_chain_problem(const KinematicChain& chain,
                                    const TaskSpec& spec) {
  return build_problem(chain, spec);
}

}  // namespace

std::vector<Eigen::Vector3d> circle_waypoints(const Eigen::Vector3d& center,
                                              double radius, CirclePlane plane,
                                              int count) {
  if (radius <= 0.0) throw std::invalid_argument("circle radius must be positive");
  if (count < 3) throw std::invalid_argument("need at least 3 waypoints");
  std::vector<Eigen::Vector3d> points;
  points.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double angle = 2.0 * kPi * k / count;
    Eigen::Vector3d p = center;
    if (plane == CirclePlane::xy) {
      p.x() += radius * std::cos(angle);
      p.y() += radius * std::sin(angle);
    } else {
      p.y() += radius * std::cos(angle);
      p.z() += radius * std::sin(angle);
    }
    points.push_back(p);
  }
  return points;
}

SimpleFormConstraint loop_closure_rows(const ClosedChainSpec& spec, int t) {
  if (!spec.arm1.is_planar() || !spec.arm2.is_planar()) {
    throw std::invalid_argument("loop closure needs planar arms");
  }
  const int m1 = spec.arm1.joints();
  const int m2 = spec.arm2.joints();
  const auto& l1 = spec.arm1.planar().link_lengths;
  const auto& l2 = spec.arm2.planar().link_lengths;
  const Eigen::Vector3d b1 = spec.arm1.base_pose().position;
  const Eigen::Vector3d b2 = spec.arm2.base_pose().position;

  const bool terminal =
      spec.terminal_goal && spec.horizon > 0 && t == spec.horizon - 1;
  const int rows = 6 + (terminal ? 2 : 0);

  SimpleFormConstraint c;
  c.coeff_v = Mat::Zero(rows, m1 + m2);
  c.coeff_w = Mat::Zero(rows, m1 + m2);
  c.offset = Vec::Zero(rows);

  // End effectors coincide: p1 - p2 = 0.
  for (int j = 0; j < m1; ++j) {
    c.coeff_v(0, j) = l1[static_cast<size_t>(j)];
    c.coeff_w(1, j) = l1[static_cast<size_t>(j)];
  }
  for (int j = 0; j < m2; ++j) {
    c.coeff_v(0, m1 + j) = -l2[static_cast<size_t>(j)];
    c.coeff_w(1, m1 + j) = -l2[static_cast<size_t>(j)];
  }
  c.offset[0] = b1.x() - b2.x();
  c.offset[1] = b1.y() - b2.y();

  // Fixed opposing headings of the joined last links.
  c.coeff_v(2, m1 - 1) = 1.0;
  c.offset[2] = -std::cos(spec.heading1);
  c.coeff_w(3, m1 - 1) = 1.0;
  c.offset[3] = -std::sin(spec.heading1);
  c.coeff_v(4, m1 + m2 - 1) = 1.0;
  c.offset[4] = -std::cos(spec.heading2);
  c.coeff_w(5, m1 + m2 - 1) = 1.0;
  c.offset[5] = -std::sin(spec.heading2);

  if (terminal) {
    for (int j = 0; j < m1; ++j) {
      c.coeff_v(6, j) = l1[static_cast<size_t>(j)];
      c.coeff_w(7, j) = l1[static_cast<size_t>(j)];
    }
    c.offset[6] = b1.x() - spec.terminal_goal->x();
    c.offset[7] = b1.y() - spec.terminal_goal->y();
  }
  return c;
}

CyclicityReport cyclicity_gap(const Trajectory& trajectory) {
  const int n = trajectory.n();
  if (n < 2) throw std::invalid_argument("trajectory too short for cyclicity");
  CyclicityReport report;
  report.position_gap =
      (trajectory.q.row(0) - trajectory.q.row(n - 1)).lpNorm<1>();
  const Eigen::RowVectorXd vel_first =
      (trajectory.q.row(1) - trajectory.q.row(0)) / trajectory.dt;
  const Eigen::RowVectorXd vel_last =
      (trajectory.q.row(n - 1) - trajectory.q.row(n - 2)) / trajectory.dt;
  report.velocity_gap = (vel_first - vel_last).lpNorm<1>();
  return report;
}

Scenario build_application(const std::string& id,
                           const ScenarioOverrides& o) {
  Scenario scenario;
  scenario.id = id;
  scenario.dt = o.dt.value_or(0.1);

  if (id == "app1") {
    scenario.description =
        "planar 6-dof circle with the last link held horizontal";
    scenario.n = o.n.value_or(100);
    scenario.dt = o.dt.value_or(0.25);
    scenario.cyclic = true;
    KinematicChain chain = default_planar_arm(o, Eigen::Vector3d::Zero());
    const Eigen::Vector3d center =
        o.circle_center.value_or(Eigen::Vector3d(2.5, 1.0, 0.0));
    const double radius = o.circle_radius.value_or(0.5);
    const auto targets =
        closed_circle_targets(center, radius, CirclePlane::xy, scenario.n);

    TaskSpec spec;
    spec.horizon = scenario.n;
    Waypoint heading;
    heading.all = true;
    heading.rotation = Eigen::Matrix3d::Identity();
    spec.waypoints.push_back(heading);
    for (int t = 0; t < scenario.n; ++t) {
      Waypoint wp;
      wp.t = t;
      wp.position = targets[static_cast<size_t>(t)];
      wp.mask = {true, true, false};
      spec.waypoints.push_back(wp);
    }
    scenario.problem = compile_chain_problem(chain, spec);
    scenario.chains.push_back(std::move(chain));
    return scenario;
  }

  if (id == "app2") {
    scenario.description = "dual-arm closed kinematic chain, point to point";
    scenario.n = o.n.value_or(50);
    const Eigen::Vector3d base2 =
        o.second_base.value_or(Eigen::Vector3d(4.0, 0.0, 0.0));
    ClosedChainSpec closed{default_planar_arm(o, Eigen::Vector3d::Zero()),
                           default_planar_arm(o, base2), 0.0, kPi, {}, 0};
    const Eigen::Vector3d goal =
        o.goal_position.value_or(Eigen::Vector3d(2.0, 1.0, 0.0));
    closed.terminal_goal = Eigen::Vector2d(goal.x(), goal.y());
    closed.horizon = scenario.n;

    const int m1 = closed.arm1.joints();
    const int m2 = closed.arm2.joints();
    scenario.problem.coupling = Mat::Zero(m1 + m2, m1 + m2);
    scenario.problem.coupling.topLeftCorner(m1, m1) =
        cumulative_coupling_matrix(closed.arm1);
    scenario.problem.coupling.bottomRightCorner(m2, m2) =
        cumulative_coupling_matrix(closed.arm2);
    scenario.problem.q_max.resize(m1 + m2);
    scenario.problem.q_max << closed.arm1.q_max(), closed.arm2.q_max();
    for (int t = 0; t < scenario.n; ++t) {
      scenario.problem.constraints.emplace_back(loop_closure_rows(closed, t));
    }

    if (o.start_config) {
      scenario.pin_start = *o.start_config;
    } else if (m1 == 6 && m2 == 6) {
      // Mirror-symmetric start: both end effectors meet on the midline with
      // opposing horizontal last links.
      Vec start(12);
      start << kPi / 2, 0.0, -kPi / 2, -kPi / 2, 0.0, kPi / 2,
          kPi / 2, 0.0, kPi / 2, kPi / 2, 0.0, -kPi / 2;
      scenario.pin_start = start;
    }
    scenario.goal_position = goal;
    scenario.chains.push_back(std::move(closed.arm1));
    scenario.chains.push_back(std::move(closed.arm2));
    return scenario;
  }

  if (id == "app3") {
    scenario.description =
        "spatial 7-dof circle in the Y-Z plane with fixed orientation";
    scenario.n = o.n.value_or(100);
    scenario.cyclic = true;
    const KinematicChain& chain = require_spatial(o, id);
    const Eigen::Matrix3d rotation =
        o.orientation_rpy
            ? rotation_xyz((*o.orientation_rpy)[0], (*o.orientation_rpy)[1],
                           (*o.orientation_rpy)[2])
            : Eigen::Matrix3d::Identity();
    const Eigen::Vector3d center =
        o.circle_center.value_or(Eigen::Vector3d(0.0, 0.30, 0.80));
    const double radius = o.circle_radius.value_or(0.10);
    const auto targets =
        closed_circle_targets(center, radius, CirclePlane::yz, scenario.n);

    TaskSpec spec;
    spec.horizon = scenario.n;
    Waypoint orient;
    orient.all = true;
    orient.rotation = rotation;
    spec.waypoints.push_back(orient);
    for (int t = 0; t < scenario.n; ++t) {
      Waypoint wp;
      wp.t = t;
      wp.position = targets[static_cast<size_t>(t)];
      wp.mask = {true, true, true};
      spec.waypoints.push_back(wp);
    }
    scenario.problem = compile_chain_problem(chain, spec);
    scenario.orientation_target = rotation;
    scenario.chains.push_back(chain);
    return scenario;
  }

  if (id == "app4" || id == "app5") {
    const bool planar_lock = (id == "app4");
    scenario.description =
        planar_lock
            ? "point to point on a fixed-X plane with fixed orientation"
            : "point to point with fixed orientation";
    scenario.n = o.n.value_or(50);
    const KinematicChain& chain = require_spatial(o, id);
    const Eigen::Vector3d rpy = o.orientation_rpy.value_or(
        planar_lock ? Eigen::Vector3d(0.001, 1.04, 0.007)
                    : Eigen::Vector3d(1.04, 0.0, 0.0));
    const Eigen::Matrix3d rotation = rotation_xyz(rpy[0], rpy[1], rpy[2]);
    const Eigen::Vector3d goal = o.goal_position.value_or(
        planar_lock ? Eigen::Vector3d(0.25, 0.45, 0.85)
                    : Eigen::Vector3d(0.0, -0.30, 0.90));

    TaskSpec spec;
    spec.horizon = scenario.n;
    Waypoint trajectory_wide;
    trajectory_wide.all = true;
    trajectory_wide.rotation = rotation;
    if (planar_lock) {
      const double plane = o.plane_x.value_or(goal.x());
      trajectory_wide.position = Eigen::Vector3d(plane, 0.0, 0.0);
      trajectory_wide.mask = {true, false, false};
      scenario.plane_x = plane;
    }
    spec.waypoints.push_back(trajectory_wide);
    Waypoint terminal;
    terminal.terminal = true;
    terminal.position = goal;
    terminal.mask = {true, true, true};
    spec.waypoints.push_back(terminal);

    scenario.problem = compile_chain_problem(chain, spec);
    scenario.goal_position = goal;
    scenario.orientation_target = rotation;

    if (o.start_config) {
      scenario.pin_start = *o.start_config;
    } else if (!o.orientation_rpy && !o.plane_x && !o.goal_position &&
               chain.joints() == 7) {
      // Start configurations on the default constraint manifolds, about
      // 0.4 m away from the default goals. Override start_config together
      // with the targets.
      Vec start(7);
      if (planar_lock) {
        start << 0.905216, 0.302146, -0.253930, 1.217059, -1.621441,
            -0.514438, 1.191813;
      } else {
        start << 0.030532, -0.217988, -0.036794, 1.306871, 1.048594, 1.543146,
            -0.037206;
      }
      scenario.pin_start = start;
    }
    scenario.chains.push_back(chain);
    return scenario;
  }

  throw std::invalid_argument("unknown application id: " + id);
}

Mat initial_trajectory(const Scenario& scenario) {
  const LiftedProblem& problem = scenario.problem;
  if (scenario.pin_start) {
    return scenario.pin_start->transpose().replicate(problem.n(), 1);
  }

  LiftedProblem first;
  first.coupling = problem.coupling;
  first.q_max = problem.q_max;
  first.constraints.push_back(problem.constraints.front());

  if (std::holds_alternative<SimpleFormConstraint>(problem.constraints.front())) {
    SolverConfig config;
    config.max_iter = 300;
    config.proj_tol = 1e-8;
    config.cost = CostModel::velocity;
    const SolveResult feasible =
        map_feasibility(first, Mat::Zero(1, problem.joints()), config);
    return feasible.trajectory.q.row(0).replicate(problem.n(), 1);
  }

  // General form: a short horizon with the first constraint at every step.
  first.constraints.push_back(problem.constraints.front());
  first.constraints.push_back(problem.constraints.front());
  SolverConfig config;
  config.max_iter = 600;
  config.worker_count = 1;
  const SolveResult feasible = solve(first, config);
  return feasible.trajectory.q.row(1).replicate(problem.n(), 1);
}

double max_orientation_residual(const KinematicChain& chain,
                                const Eigen::Matrix3d& desired, const Mat& q) {
  double worst = 0.0;
  for (int t = 0; t < q.rows(); ++t) {
    const Pose pose = forward_kinematics(chain, q.row(t).transpose());
    worst = std::max(worst,
                     (pose.rotation - desired).cwiseAbs().maxCoeff());
  }
  return worst;
}

double max_axis_residual(const KinematicChain& chain, int axis, double value,
                         const Mat& q) {
  double worst = 0.0;
  for (int t = 0; t < q.rows(); ++t) {
    const Pose pose = forward_kinematics(chain, q.row(t).transpose());
    worst = std::max(worst, std::abs(pose.position[axis] - value));
  }
  return worst;
}

double terminal_position_error(const KinematicChain& chain,
                               const Eigen::Vector3d& goal, const Mat& q) {
  const Pose pose =
      forward_kinematics(chain, q.row(q.rows() - 1).transpose());
  return (pose.position - goal).norm();
}

}  // namespace tcopt
