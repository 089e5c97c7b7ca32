#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "tcopt/constraints.hpp"
#include "tcopt/types.hpp"

namespace tcopt {

enum class SolveMode { coupled, distributive };
enum class CostModel { acceleration, velocity };

struct SolverConfig {
  int n = 0;
  double dt = 0.1;
  int max_iter = 300;
  SolveMode mode = SolveMode::coupled;
  CostModel cost = CostModel::acceleration;
  double proj_tol = 1e-3;
  double task_tol = 1e-3;
  double cost_tol = 1e-4;
  double rho_q = 1.0;
  double rho_v = 1.0;
  double rho_w = 1.0;
  double rho_f = 1.0;
  double delta = 1.1;
  double rho_max = 1e6;
  std::optional<Vec> pin_start;
  int worker_count = 1;
};

/// Mode-tuned starting weights. The distributive joint update carries only
/// the expansion-point share of the smoothness cost, so it needs a stronger
/// initial pull toward the angle targets.
SolverConfig default_solver_config(SolveMode mode);

/// The solver-facing problem: lifted coupling A (one row per lifted angle),
/// symmetric joint limits, and one constraint per timestep.
struct LiftedProblem {
  Mat coupling;                                // r x m
  Vec q_max;                                   // m
  std::vector<TimestepConstraint> constraints; // n entries

  int n() const { return static_cast<int>(constraints.size()); }
  int joints() const { return static_cast<int>(q_max.size()); }
  int lifted() const { return static_cast<int>(coupling.rows()); }
};

/// Per-timestep slack matrices, componentwise in [-1, 1].
struct SlackState {
  Mat v;  // n x r
  Mat w;  // n x r
};

/// Lagrange multipliers and proximal weights shared by all timesteps.
struct MultiplierState {
  Mat lam_q;                // n x r
  Mat lam_v;                // n x r
  Mat lam_w;                // n x r
  std::vector<Vec> lam_f;   // n entries, one per constraint row set
  double rho_q = 1.0;
  double rho_v = 1.0;
  double rho_w = 1.0;
  double rho_f = 1.0;
  double delta = 1.1;
  double rho_max = 1e6;
};

MultiplierState make_multipliers(const LiftedProblem& problem,
                                 const SolverConfig& config);

struct Trajectory {
  Mat q;  // n x m
  double dt = 0.1;

  int n() const { return static_cast<int>(q.rows()); }
  int joints() const { return static_cast<int>(q.cols()); }
};

struct IterationReport {
  int iteration = 0;
  double proj_res_v = 0.0;  // max over t of the l1 slack gap in v
  double proj_res_w = 0.0;
  double task_res = 0.0;    // max over t of the linf constraint residual
  double cost = 0.0;
  double wall_ms = 0.0;
};

struct SolveResult {
  Trajectory trajectory;
  SlackState slacks;
  std::vector<IterationReport> reports;
  bool converged = false;
};

/// Euclidean projection of the proximal target onto the affine row set,
/// then componentwise clipping to [-1, 1]. Throws on rank-deficient rows.
std::pair<Vec, Vec> project_slacks(const Vec& target_v, const Vec& target_w,
                                   const SimpleFormConstraint& constraint);

/// Lifts atan2(w, v) to the 2-pi branch nearest theta_prev. Pairs shorter
/// than 1e-9 keep the previous component.
Vec branch_shifted_theta(const Vec& v, const Vec& w, const Vec& theta_prev);

/// Angles back to joints: branch-shifted atan2 targets, solved through the
/// coupling in least squares, clipped to the joint limits.
Vec recover_joints(const Vec& v, const Vec& w, const Vec& q_prev,
                   const Mat& coupling, const Vec& q_max);
Vec recover_joints(const Vec& v, const Vec& w, const Vec& q_prev,
                   const KinematicChain& chain);

/// Optional per-iteration capture of the alternating-projection iterates.
struct MapTrace {
  std::vector<Mat> v;
  std::vector<Mat> w;
  std::vector<Mat> q;
};

/// Alternating projections between the constraint rows and the realizable
/// slack set, independently per timestep. All constraints must be in simple
/// form. Converges when the worst per-timestep l1 projection gap drops
/// below proj_tol; otherwise returns the best iterate, unconverged.
SolveResult map_feasibility(const LiftedProblem& problem, const Mat& q_init,
                            const SolverConfig& config,
                            MapTrace* trace = nullptr);

/// Slack update for simple-form rows: exact minimizer of the proximal +
/// multiplier + penalty quadratic over the box (PD solve, then clip).
std::pair<Vec, Vec> minimize_L2(const Vec& b_v, const Vec& b_w,
                                const Vec& lam_v, const Vec& lam_w,
                                const Vec& lam_f, double rho_v, double rho_w,
                                double rho_f,
                                const SimpleFormConstraint& constraint);

/// Slack update for one joint pair of a general-form constraint, given the
/// slice extracted at the current remaining slacks. 2x2 PD solve + clip.
std::pair<double, double> update_joint_slack_pair(
    const AffineSlice& slice, double cos_qj, double sin_qj, double lam_vj,
    double lam_wj, const Vec& lam_f, double rho_v, double rho_w, double rho_f);

/// One Gauss-Seidel sweep (ascending joint order) of update_joint_slack_pair
/// over every pair of timestep t; updated pairs are visible to later slices.
void general_slack_sweep(const ConstraintEvaluator& evaluator, const Vec& q_t,
                         const Vec& lam_v, const Vec& lam_w, const Vec& lam_f,
                         double rho_v, double rho_w, double rho_f, Vec& v,
                         Vec& w);

/// Joint update with the timestep-coupled smoothness cost: one banded
/// positive definite solve over all timesteps, then clipping. A pinned
/// first configuration is eliminated from the system.
Mat minimize_L1_coupled(const Mat& theta, const Mat& lam_q, double rho_q,
                        const Mat& coupling, const Vec& q_max, CostModel cost,
                        const std::optional<Vec>& pin_start);

/// Fully distributive joint update: the smoothness cost is expanded around
/// the previous iterate, decoupling the timesteps.
Mat minimize_L1_decoupled(const Mat& theta, const Mat& lam_q, double rho_q,
                          const Mat& coupling, const Vec& q_max,
                          CostModel cost, const Mat& q_prev,
                          const std::optional<Vec>& pin_start,
                          int worker_count);

/// lambda <- lambda + rho * residual for the angle, slack, and task rows.
/// theta must be the branch-shifted target used by the joint update.
void update_multipliers(MultiplierState& state, const LiftedProblem& problem,
                        const SlackState& slacks, const Mat& q,
                        const Mat& theta, int worker_count);

/// rho <- min(rho * delta, rho_max) for all four weight families.
void update_proximal_weights(MultiplierState& state);

bool check_convergence(const IterationReport& current,
                       const IterationReport& previous,
                       const SolverConfig& config);

/// Sum of squared second differences (acceleration) or first differences
/// (velocity) of the rows of q.
double smoothness_cost(const Mat& q, CostModel cost);

/// Full optimizer loop: slack updates, joint update (per config.mode),
/// multiplier updates, and geometric weight growth, until convergence or
/// max_iter. Returns the best iterate when unconverged.
///
/// The trajectory starts at config.pin_start repeated (zeros when unset);
/// the overload accepts an explicit starting trajectory instead.
SolveResult solve(const LiftedProblem& problem, const SolverConfig& config);
SolveResult solve(const LiftedProblem& problem, const SolverConfig& config,
                  const Mat& q_init);

/// Convenience wrapper compiling a single-chain task spec into a problem.
SolveResult solve(const KinematicChain& chain, const TaskSpec& spec,
                  const SolverConfig& config);

LiftedProblem build_problem(const KinematicChain& chain, const TaskSpec& spec);

/// Constraint residual of the realized trajectory: rows evaluated at the
/// slacks of each q_t, reduced to the max linf norm over timesteps.
double trajectory_task_residual(const LiftedProblem& problem, const Mat& q);

}  // namespace tcopt
