#include "tcopt/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "tcopt/banded.hpp"
#include "tcopt/parallel.hpp"

namespace tcopt {

namespace {

constexpr double kDegeneratePair = 1e-9;
constexpr double kMultiplierTrust = 0.05;

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

Vec clip_box(const Vec& x, const Vec& bound) {
  Vec out = x;
  for (int i = 0; i < x.size(); ++i) {
    out[i] = clip(x[i], -bound[i], bound[i]);
  }
  return out;
}

Vec clip_unit(Vec x) {
  for (int i = 0; i < x.size(); ++i) {
    x[i] = clip(x[i], -1.0, 1.0);
  }
  return x;
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

const SimpleFormConstraint* as_simple(const TimestepConstraint& c) {
  return std::get_if<SimpleFormConstraint>(&c);
}

const ConstraintEvaluator* as_general(const TimestepConstraint& c) {
  return std::get_if<ConstraintEvaluator>(&c);
}

// Exact l1 projection of s onto {a . s + c = 0} within the unit box, for a
// single constraint row. Full correction along one maximal-coefficient
// coordinate is optimal when the box allows it; otherwise the correction
// waterfills across coordinates in decreasing coefficient order. When
// several maximal coordinates admit a full fix the caller picks among the
// returned candidates.
std::vector<Vec> l1_row_candidates(const Vec& a, double c, const Vec& s) {
  const double resid = a.dot(s) + c;
  if (std::abs(resid) < 1e-15) {
    return {s};
  }
  const double amax = a.cwiseAbs().maxCoeff();
  if (amax <= 0.0) {
    return {s};  // constant row, nothing to move
  }

  std::vector<Vec> full_fixes;
  for (int i = 0; i < a.size(); ++i) {
    if (std::abs(a[i]) < amax * (1.0 - 1e-12)) continue;
    const double moved = s[i] - resid / a[i];
    if (moved < -1.0 - 1e-12 || moved > 1.0 + 1e-12) continue;
    Vec cand = s;
    cand[i] = clip(moved, -1.0, 1.0);
    full_fixes.push_back(std::move(cand));
  }
  if (!full_fixes.empty()) {
    return full_fixes;
  }

  // Waterfill: largest coefficients first, each coordinate moved to its
  // bound until the residual is absorbed.
  std::vector<int> order(static_cast<size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) order[static_cast<size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    return std::abs(a[lhs]) > std::abs(a[rhs]);
  });
  Vec out = s;
  double rem = resid;
  for (int i : order) {
    if (std::abs(rem) < 1e-15 || a[i] == 0.0) break;
    const double want = -rem / a[i];
    const double step = clip(want, -1.0 - out[i], 1.0 - out[i]);
    out[i] += step;
    rem += a[i] * step;
  }
  return {out};
}

struct StackedRow {
  Vec a;
  double c = 0.0;
};

StackedRow stack_single_row(const SimpleFormConstraint& constraint) {
  StackedRow row;
  const int r = constraint.lifted();
  row.a.resize(2 * r);
  row.a.head(r) = constraint.coeff_v.row(0).transpose();
  row.a.tail(r) = constraint.coeff_w.row(0).transpose();
  row.c = constraint.offset[0];
  return row;
}

// Exact minimizer of 0.5 x^T (2H) x - rhs^T x ... i.e. of the quadratic with
// Hessian H and linear term -rhs, over the unit box. Cyclic coordinate
// descent from a warm start; each coordinate step is an exact clamped
// minimization, so the sweep converges to the unique box optimum of the
// strictly convex quadratic. Plain clipping of the unconstrained solution is
// not optimal when bounds are active (the lifted circle touches the box at
// every angle multiple of pi/2) and leaves a persistent constraint residual.
void box_qp_refine(const Mat& H, const Vec& rhs, Vec& x) {
  const int dim = static_cast<int>(x.size());
  for (int sweep = 0; sweep < 200; ++sweep) {
    double largest_step = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double gradient = H.row(i).dot(x) - rhs[i];
      const double candidate =
          clip(x[i] - gradient / H(i, i), -1.0, 1.0);
      largest_step = std::max(largest_step, std::abs(candidate - x[i]));
      x[i] = candidate;
    }
    if (largest_step < 1e-14) break;
  }
}

}  // namespace

std::pair<Vec, Vec> project_slacks(const Vec& target_v, const Vec& target_w,
                                   const SimpleFormConstraint& constraint) {
  const int r = constraint.lifted();
  const int d = constraint.rows();
  if (target_v.size() != r || target_w.size() != r) {
    throw std::invalid_argument("projection target size does not match rows");
  }
  Mat M(d, 2 * r);
  M.leftCols(r) = constraint.coeff_v;
  M.rightCols(r) = constraint.coeff_w;

  Vec s(2 * r);
  s.head(r) = target_v;
  s.tail(r) = target_w;

  const Mat gram = M * M.transpose();
  Eigen::FullPivLU<Mat> lu(gram);
  if (lu.rank() < d) {
    throw std::runtime_error("degenerate constraint rows in projection");
  }
  const Vec gap = M * s + constraint.offset;
  s -= M.transpose() * lu.solve(gap);

  s = clip_unit(std::move(s));
  return {s.head(r), s.tail(r)};
}

Vec branch_shifted_theta(const Vec& v, const Vec& w, const Vec& theta_prev) {
  if (v.size() != theta_prev.size() || w.size() != theta_prev.size()) {
    throw std::invalid_argument("theta size mismatch");
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Vec theta(v.size());
  for (int i = 0; i < v.size(); ++i) {
    if (std::hypot(v[i], w[i]) < kDegeneratePair) {
      // Direction undefined; keep the previous branch value.
      theta[i] = theta_prev[i];
      continue;
    }
    double angle = std::atan2(w[i], v[i]);
    angle += two_pi * std::round((theta_prev[i] - angle) / two_pi);
    theta[i] = angle;
  }
  return theta;
}

Vec recover_joints(const Vec& v, const Vec& w, const Vec& q_prev,
                   const Mat& coupling, const Vec& q_max) {
  if (q_prev.size() != coupling.cols()) {
    throw std::invalid_argument("q_prev size does not match coupling");
  }
  const Vec theta = branch_shifted_theta(v, w, coupling * q_prev);
  const Vec q = coupling.colPivHouseholderQr().solve(theta);
  return clip_box(q, q_max);
}

Vec recover_joints(const Vec& v, const Vec& w, const Vec& q_prev,
                   const KinematicChain& chain) {
  return recover_joints(v, w, q_prev, cumulative_coupling_matrix(chain),
                        chain.q_max());
}

SolveResult map_feasibility(const LiftedProblem& problem, const Mat& q_init,
                            const SolverConfig& config, MapTrace* trace) {
  const int n = problem.n();
  const int m = problem.joints();
  const int r = problem.lifted();
  if (q_init.rows() != n || q_init.cols() != m) {
    throw std::invalid_argument("q_init shape does not match problem");
  }
  for (const auto& c : problem.constraints) {
    if (!as_simple(c)) {
      throw std::invalid_argument("alternating projection needs simple-form rows");
    }
  }

  Mat Q = q_init;
  for (int t = 0; t < n; ++t) {
    Q.row(t) = clip_box(Q.row(t).transpose(), problem.q_max).transpose();
  }
  Mat V(n, r), W(n, r);
  for (int t = 0; t < n; ++t) {
    auto [bv, bw] = slack_targets(problem.coupling, Q.row(t).transpose());
    V.row(t) = bv.transpose();
    W.row(t) = bw.transpose();
  }

  SolveResult result;
  result.trajectory.dt = config.dt;
  const auto start = Clock::now();

  Mat best_q = Q, best_v = V, best_w = W;
  double best_gap = std::numeric_limits<double>::infinity();

  for (int k = 0; k < config.max_iter; ++k) {
    parallel_for(n, config.worker_count, [&](int t) {
      const auto& constraint = *as_simple(problem.constraints[static_cast<size_t>(t)]);
      const Vec q_t = Q.row(t).transpose();
      auto [bv, bw] = slack_targets(problem.coupling, q_t);

      Vec v_t, w_t;
      if (constraint.rows() == 1) {
        // Exact l1 step; pick among tied candidates by the gap left after
        // the follow-up joint recovery.
        const StackedRow row = stack_single_row(constraint);
        Vec s(2 * r);
        s.head(r) = bv;
        s.tail(r) = bw;
        const std::vector<Vec> candidates = l1_row_candidates(row.a, row.c, s);
        double best_cand_gap = std::numeric_limits<double>::infinity();
        Vec best_s, best_recovered;
        for (const Vec& cand : candidates) {
          const Vec q_cand = recover_joints(cand.head(r), cand.tail(r), q_t,
                                            problem.coupling, problem.q_max);
          auto [cv, cw] = slack_targets(problem.coupling, q_cand);
          const double gap =
              (cand.head(r) - cv).lpNorm<1>() + (cand.tail(r) - cw).lpNorm<1>();
          if (gap < best_cand_gap) {
            best_cand_gap = gap;
            best_s = cand;
            best_recovered = q_cand;
          }
        }
        v_t = best_s.head(r);
        w_t = best_s.tail(r);
        Q.row(t) = best_recovered.transpose();
      } else {
        std::tie(v_t, w_t) = project_slacks(bv, bw, constraint);
        Q.row(t) = recover_joints(v_t, w_t, q_t, problem.coupling, problem.q_max)
                       .transpose();
      }
      V.row(t) = v_t.transpose();
      W.row(t) = w_t.transpose();
    });

    IterationReport report;
    report.iteration = k;
    for (int t = 0; t < n; ++t) {
      auto [bv, bw] = slack_targets(problem.coupling, Q.row(t).transpose());
      report.proj_res_v = std::max(report.proj_res_v,
                                   (V.row(t).transpose() - bv).lpNorm<1>());
      report.proj_res_w = std::max(report.proj_res_w,
                                   (W.row(t).transpose() - bw).lpNorm<1>());
      const Vec f = constraint_residual(problem.constraints[static_cast<size_t>(t)],
                                        V.row(t).transpose(), W.row(t).transpose());
      report.task_res =
          std::max(report.task_res, f.size() ? f.lpNorm<Eigen::Infinity>() : 0.0);
    }
    report.cost = (n >= 3) ? smoothness_cost(Q, CostModel::acceleration) : 0.0;
    report.wall_ms = ms_since(start);
    result.reports.push_back(report);
    if (trace) {
      trace->v.push_back(V);
      trace->w.push_back(W);
      trace->q.push_back(Q);
    }

    const double gap = report.proj_res_v + report.proj_res_w;
    if (gap < best_gap) {
      best_gap = gap;
      best_q = Q;
      best_v = V;
      best_w = W;
    }
    if (gap < config.proj_tol) {
      result.converged = true;
      break;
    }
  }

  result.trajectory.q = result.converged ? Q : best_q;
  result.slacks.v = result.converged ? V : best_v;
  result.slacks.w = result.converged ? W : best_w;
  return result;
}

std::pair<Vec, Vec> minimize_L2(const Vec& b_v, const Vec& b_w,
                                const Vec& lam_v, const Vec& lam_w,
                                const Vec& lam_f, double rho_v, double rho_w,
                                double rho_f,
                                const SimpleFormConstraint& constraint) {
  const int r = constraint.lifted();
  const int d = constraint.rows();
  if (b_v.size() != r || b_w.size() != r || lam_v.size() != r ||
      lam_w.size() != r || lam_f.size() != d) {
    throw std::invalid_argument("minimize_L2 size mismatch");
  }
  Mat M(d, 2 * r);
  M.leftCols(r) = constraint.coeff_v;
  M.rightCols(r) = constraint.coeff_w;

  Mat H = 2.0 * rho_f * (M.transpose() * M);
  for (int i = 0; i < r; ++i) {
    H(i, i) += 2.0 * rho_v;
    H(r + i, r + i) += 2.0 * rho_w;
  }
  Vec rhs(2 * r);
  rhs.head(r) = 2.0 * rho_v * b_v - lam_v;
  rhs.tail(r) = 2.0 * rho_w * b_w - lam_w;
  rhs -= M.transpose() * (lam_f + 2.0 * rho_f * constraint.offset);

  Vec s = clip_unit(H.ldlt().solve(rhs));
  box_qp_refine(H, rhs, s);
  return {s.head(r), s.tail(r)};
}

std::pair<double, double> update_joint_slack_pair(
    const AffineSlice& slice, double cos_qj, double sin_qj, double lam_vj,
    double lam_wj, const Vec& lam_f, double rho_v, double rho_w,
    double rho_f) {
  const double h00 = 2.0 * (rho_v + rho_f * slice.g.squaredNorm());
  const double h11 = 2.0 * (rho_w + rho_f * slice.h.squaredNorm());
  const double h01 = 2.0 * rho_f * slice.g.dot(slice.h);
  const double r0 = 2.0 * rho_v * cos_qj - lam_vj - slice.g.dot(lam_f) -
                    2.0 * rho_f * slice.g.dot(slice.p);
  const double r1 = 2.0 * rho_w * sin_qj - lam_wj - slice.h.dot(lam_f) -
                    2.0 * rho_f * slice.h.dot(slice.p);
  const double det = h00 * h11 - h01 * h01;
  Vec s(2);
  s[0] = clip((h11 * r0 - h01 * r1) / det, -1.0, 1.0);
  s[1] = clip((h00 * r1 - h01 * r0) / det, -1.0, 1.0);
  Mat H(2, 2);
  H << h00, h01, h01, h11;
  Vec rhs(2);
  rhs << r0, r1;
  box_qp_refine(H, rhs, s);
  return {s[0], s[1]};
}

void general_slack_sweep(const ConstraintEvaluator& evaluator, const Vec& q_t,
                         const Vec& lam_v, const Vec& lam_w, const Vec& lam_f,
                         double rho_v, double rho_w, double rho_f, Vec& v,
                         Vec& w) {
  const int m = evaluator.joints();
  if (v.size() != m || w.size() != m || q_t.size() != m) {
    throw std::invalid_argument("slack sweep size mismatch");
  }
  for (int j = 0; j < m; ++j) {
    const AffineSlice slice = extract_affine_slice(evaluator, v, w, j);
    const auto [vj, wj] = update_joint_slack_pair(
        slice, std::cos(q_t[j]), std::sin(q_t[j]), lam_v[j], lam_w[j], lam_f,
        rho_v, rho_w, rho_f);
    v[j] = vj;
    w[j] = wj;
  }
}

Mat minimize_L1_coupled(const Mat& theta, const Mat& lam_q, double rho_q,
                        const Mat& coupling, const Vec& q_max, CostModel cost,
                        const std::optional<Vec>& pin_start) {
  const int n = static_cast<int>(theta.rows());
  const int m = static_cast<int>(coupling.cols());
  if (rho_q <= 0.0) {
    throw std::invalid_argument("rho_q must be positive");
  }
  if (cost == CostModel::acceleration && n < 3) {
    throw std::invalid_argument("acceleration cost needs at least 3 timesteps");
  }
  if (cost == CostModel::velocity && n < 2) {
    throw std::invalid_argument("velocity cost needs at least 2 timesteps");
  }
  if (pin_start && pin_start->size() != m) {
    throw std::invalid_argument("pinned start size does not match joints");
  }

  const int kd = (cost == CostModel::acceleration ? 2 : 1) * m;
  BandedSpdMatrix H(n * m, kd);
  Vec rhs = Vec::Zero(n * m);

  // Smoothness stencil, separable per joint dimension.
  if (cost == CostModel::acceleration) {
    for (int s = 2; s < n; ++s) {
      for (int j = 0; j < m; ++j) {
        const int i0 = (s - 2) * m + j;
        const int i1 = (s - 1) * m + j;
        const int i2 = s * m + j;
        H.add(i0, i0, 2.0);
        H.add(i1, i1, 8.0);
        H.add(i2, i2, 2.0);
        H.add(i1, i0, -4.0);
        H.add(i2, i0, 2.0);
        H.add(i2, i1, -4.0);
      }
    }
  } else {
    for (int s = 1; s < n; ++s) {
      for (int j = 0; j < m; ++j) {
        const int i0 = (s - 1) * m + j;
        const int i1 = s * m + j;
        H.add(i0, i0, 2.0);
        H.add(i1, i1, 2.0);
        H.add(i1, i0, -2.0);
      }
    }
  }

  const Mat gram = 2.0 * rho_q * (coupling.transpose() * coupling);
  for (int t = 0; t < n; ++t) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b <= a; ++b) {
        H.add(t * m + a, t * m + b, gram(a, b));
      }
    }
    rhs.segment(t * m, m) =
        coupling.transpose() *
        (2.0 * rho_q * theta.row(t).transpose() - lam_q.row(t).transpose());
  }

  if (pin_start) {
    // Symmetric elimination of the first block.
    for (int p = 0; p < m; ++p) {
      const double value = (*pin_start)[p];
      const int imax = std::min(n * m - 1, p + kd);
      for (int i = 0; i < m; ++i) {
        if (i != p) {
          rhs[i] -= H.entry(std::max(i, p), std::min(i, p)) * value;
        }
      }
      for (int i = m; i <= imax; ++i) {
        rhs[i] -= H.entry(i, p) * value;
        H.set(i, p, 0.0);
      }
      rhs[p] = value;
    }
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b <= a; ++b) {
        H.set(a, b, a == b ? 1.0 : 0.0);
      }
    }
  }

  H.factorize();
  const Vec x = H.solve(rhs);

  Mat Q(n, m);
  for (int t = 0; t < n; ++t) {
    Q.row(t) = clip_box(x.segment(t * m, m), q_max).transpose();
  }
  if (pin_start) {
    Q.row(0) = pin_start->transpose();
  }
  return Q;
}

Mat minimize_L1_decoupled(const Mat& theta, const Mat& lam_q, double rho_q,
                          const Mat& coupling, const Vec& q_max,
                          CostModel cost, const Mat& q_prev,
                          const std::optional<Vec>& pin_start,
                          int worker_count) {
  const int n = static_cast<int>(theta.rows());
  const int m = static_cast<int>(coupling.cols());
  if (rho_q <= 0.0) {
    throw std::invalid_argument("rho_q must be positive");
  }
  if (q_prev.rows() != n || q_prev.cols() != m) {
    throw std::invalid_argument("previous iterate shape mismatch");
  }
  const Mat gram = 2.0 * rho_q * (coupling.transpose() * coupling);

  Mat Q(n, m);
  parallel_for(n, worker_count, [&](int t) {
    if (t == 0 && pin_start) {
      Q.row(0) = pin_start->transpose();
      return;
    }
    Mat H = gram;
    Vec rhs = coupling.transpose() *
              (2.0 * rho_q * theta.row(t).transpose() - lam_q.row(t).transpose());
    if (cost == CostModel::acceleration && t >= 2) {
      H.diagonal().array() += 2.0;
      rhs += 2.0 * (2.0 * q_prev.row(t - 1) - q_prev.row(t - 2)).transpose();
    } else if (cost == CostModel::velocity && t >= 1) {
      H.diagonal().array() += 2.0;
      rhs += 2.0 * q_prev.row(t - 1).transpose();
    }
    Q.row(t) = clip_box(H.ldlt().solve(rhs), q_max).transpose();
  });
  return Q;
}

SolverConfig default_solver_config(SolveMode mode) {
  SolverConfig config;
  config.mode = mode;
  if (mode == SolveMode::distributive) {
    config.rho_q = 100.0;
    config.max_iter = 600;
  }
  return config;
}

MultiplierState make_multipliers(const LiftedProblem& problem,
                                 const SolverConfig& config) {
  MultiplierState state;
  const int n = problem.n();
  const int r = problem.lifted();
  state.lam_q = Mat::Zero(n, r);
  state.lam_v = Mat::Zero(n, r);
  state.lam_w = Mat::Zero(n, r);
  state.lam_f.reserve(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    state.lam_f.push_back(
        Vec::Zero(constraint_rows(problem.constraints[static_cast<size_t>(t)])));
  }
  state.rho_q = config.rho_q;
  state.rho_v = config.rho_v;
  state.rho_w = config.rho_w;
  state.rho_f = config.rho_f;
  state.delta = config.delta;
  state.rho_max = config.rho_max;
  return state;
}

void update_multipliers(MultiplierState& state, const LiftedProblem& problem,
                        const SlackState& slacks, const Mat& q,
                        const Mat& theta, int worker_count) {
  const int n = problem.n();
  parallel_for(n, worker_count, [&](int t) {
    const Vec q_t = q.row(t).transpose();
    state.lam_q.row(t) +=
        state.rho_q * (problem.coupling * q_t - theta.row(t).transpose()).transpose();
    auto [bv, bw] = slack_targets(problem.coupling, q_t);
    state.lam_v.row(t) +=
        state.rho_v * (slacks.v.row(t).transpose() - bv).transpose();
    state.lam_w.row(t) +=
        state.rho_w * (slacks.w.row(t).transpose() - bw).transpose();
    state.lam_f[static_cast<size_t>(t)] +=
        state.rho_f *
        constraint_residual(problem.constraints[static_cast<size_t>(t)],
                            slacks.v.row(t).transpose(),
                            slacks.w.row(t).transpose());
  });
}

void update_proximal_weights(MultiplierState& state) {
  state.rho_q = std::min(state.rho_q * state.delta, state.rho_max);
  state.rho_v = std::min(state.rho_v * state.delta, state.rho_max);
  state.rho_w = std::min(state.rho_w * state.delta, state.rho_max);
  state.rho_f = std::min(state.rho_f * state.delta, state.rho_max);
}

bool check_convergence(const IterationReport& current,
                       const IterationReport& previous,
                       const SolverConfig& config) {
  const double cost_change = std::abs(current.cost - previous.cost);
  return current.proj_res_v < config.proj_tol &&
         current.proj_res_w < config.proj_tol &&
         current.task_res < config.task_tol &&
         cost_change < config.cost_tol * std::max(1.0, std::abs(previous.cost));
}

double smoothness_cost(const Mat& q, CostModel cost) {
  const int n = static_cast<int>(q.rows());
  if (cost == CostModel::acceleration) {
    if (n < 3) throw std::invalid_argument("trajectory too short for cost");
    double total = 0.0;
    for (int t = 2; t < n; ++t) {
      total += (q.row(t - 2) + q.row(t) - 2.0 * q.row(t - 1)).squaredNorm();
    }
    return total;
  }
  if (n < 2) throw std::invalid_argument("trajectory too short for cost");
  double total = 0.0;
  for (int t = 1; t < n; ++t) {
    total += (q.row(t) - q.row(t - 1)).squaredNorm();
  }
  return total;
}

namespace {

void validate(const LiftedProblem& problem, const SolverConfig& config) {
  const int n = problem.n();
  const int m = problem.joints();
  if (n < 1) throw std::invalid_argument("problem has no timesteps");
  if (config.n > 0 && config.n != n) {
    throw std::invalid_argument("config.n does not match problem horizon");
  }
  if (config.cost == CostModel::acceleration && n < 3) {
    throw std::invalid_argument("acceleration cost needs at least 3 timesteps");
  }
  if (config.proj_tol <= 0 || config.task_tol <= 0 || config.cost_tol <= 0) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (config.rho_q <= 0 || config.rho_v <= 0 || config.rho_w <= 0 ||
      config.rho_f <= 0) {
    throw std::invalid_argument("proximal weights must be positive");
  }
  if (config.delta < 1.0) throw std::invalid_argument("delta must be >= 1");
  if (config.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (config.worker_count < 1) {
    throw std::invalid_argument("worker_count must be >= 1");
  }
  if (config.pin_start && config.pin_start->size() != m) {
    throw std::invalid_argument("pinned start size does not match joints");
  }
  for (const auto& c : problem.constraints) {
    if (const auto* general = as_general(c)) {
      if (general->joints() != m || problem.lifted() != m ||
          !problem.coupling.isIdentity(1e-12)) {
        throw std::invalid_argument(
            "general-form constraints need per-joint (identity) coupling");
      }
    } else if (as_simple(c)->lifted() != problem.lifted()) {
      throw std::invalid_argument("constraint width does not match coupling");
    }
  }
}

}  // namespace

SolveResult solve(const LiftedProblem& problem, const SolverConfig& config) {
  Mat init(problem.n(), problem.joints());
  if (config.pin_start && config.pin_start->size() == problem.joints()) {
    init = config.pin_start->transpose().replicate(problem.n(), 1);
  } else {
    init.setZero();
  }
  return solve(problem, config, init);
}

SolveResult solve(const LiftedProblem& problem, const SolverConfig& config,
                  const Mat& q_init) {
  validate(problem, config);
  const int n = problem.n();
  const int m = problem.joints();
  const int r = problem.lifted();
  const int workers = config.worker_count;

  if (q_init.rows() != n || q_init.cols() != m) {
    throw std::invalid_argument("q_init shape does not match problem");
  }
  Mat Q = q_init;
  if (config.pin_start) {
    Q.row(0) = config.pin_start->transpose();
  }
  for (int t = 0; t < n; ++t) {
    Q.row(t) = clip_box(Q.row(t).transpose(), problem.q_max).transpose();
  }

  SlackState slacks;
  slacks.v.resize(n, r);
  slacks.w.resize(n, r);
  for (int t = 0; t < n; ++t) {
    auto [bv, bw] = slack_targets(problem.coupling, Q.row(t).transpose());
    slacks.v.row(t) = bv.transpose();
    slacks.w.row(t) = bw.transpose();
  }

  MultiplierState state = make_multipliers(problem, config);
  Mat theta = Mat::Zero(n, r);

  SolveResult result;
  result.trajectory.dt = config.dt;
  const auto start = Clock::now();

  Mat best_q = Q, best_v = slacks.v, best_w = slacks.w;
  double best_score = std::numeric_limits<double>::infinity();

  for (int k = 0; k < config.max_iter; ++k) {
    // Slack update per timestep (independent work).
    parallel_for(n, workers, [&](int t) {
      const Vec q_t = Q.row(t).transpose();
      const auto& constraint = problem.constraints[static_cast<size_t>(t)];
      if (const auto* simple = as_simple(constraint)) {
        auto [bv, bw] = slack_targets(problem.coupling, q_t);
        auto [v_t, w_t] = minimize_L2(
            bv, bw, state.lam_v.row(t).transpose(),
            state.lam_w.row(t).transpose(), state.lam_f[static_cast<size_t>(t)],
            state.rho_v, state.rho_w, state.rho_f, *simple);
        slacks.v.row(t) = v_t.transpose();
        slacks.w.row(t) = w_t.transpose();
      } else {
        Vec v_t = slacks.v.row(t).transpose();
        Vec w_t = slacks.w.row(t).transpose();
        general_slack_sweep(*as_general(constraint), q_t,
                            state.lam_v.row(t).transpose(),
                            state.lam_w.row(t).transpose(),
                            state.lam_f[static_cast<size_t>(t)], state.rho_v,
                            state.rho_w, state.rho_f, v_t, w_t);
        slacks.v.row(t) = v_t.transpose();
        slacks.w.row(t) = w_t.transpose();
      }
    });

    // Angle targets, branch-shifted around the pre-update trajectory.
    parallel_for(n, workers, [&](int t) {
      theta.row(t) = branch_shifted_theta(slacks.v.row(t).transpose(),
                                          slacks.w.row(t).transpose(),
                                          problem.coupling * Q.row(t).transpose())
                         .transpose();
    });

    if (config.mode == SolveMode::coupled) {
      Q = minimize_L1_coupled(theta, state.lam_q, state.rho_q, problem.coupling,
                              problem.q_max, config.cost, config.pin_start);
    } else {
      Q = minimize_L1_decoupled(theta, state.lam_q, state.rho_q,
                                problem.coupling, problem.q_max, config.cost, Q,
                                config.pin_start, workers);
    }

    IterationReport report;
    report.iteration = k;
    for (int t = 0; t < n; ++t) {
      auto [bv, bw] = slack_targets(problem.coupling, Q.row(t).transpose());
      report.proj_res_v = std::max(report.proj_res_v,
                                   (slacks.v.row(t).transpose() - bv).lpNorm<1>());
      report.proj_res_w = std::max(report.proj_res_w,
                                   (slacks.w.row(t).transpose() - bw).lpNorm<1>());
      const Vec f = constraint_residual(problem.constraints[static_cast<size_t>(t)],
                                        slacks.v.row(t).transpose(),
                                        slacks.w.row(t).transpose());
      report.task_res =
          std::max(report.task_res, f.size() ? f.lpNorm<Eigen::Infinity>() : 0.0);
    }
    report.cost = smoothness_cost(Q, config.cost);
    report.wall_ms = ms_since(start);
    result.reports.push_back(report);

    const double score =
        std::max({report.proj_res_v, report.proj_res_w, report.task_res});

    // Phased schedule. While the residuals are large the multipliers stay
    // frozen and only the penalties grow (multiplier steps against an
    // unfinished primal consensus wind up and limit-cycle). Inside the trust
    // band the weights hold still and the multipliers close the residual.
    // Once the residuals are safely below tolerance everything holds so the
    // remaining primal sweeps can settle the cost; further multiplier steps
    // only creep the iterate along the constraint manifold.
    const double settled =
        0.5 * std::min({config.proj_tol, config.task_tol, kMultiplierTrust});
    if (score >= kMultiplierTrust) {
      update_proximal_weights(state);
    } else if (score >= settled) {
      update_multipliers(state, problem, slacks, Q, theta, workers);
    }

    if (score < best_score) {
      best_score = score;
      best_q = Q;
      best_v = slacks.v;
      best_w = slacks.w;
    }

    if (k >= 1 && check_convergence(result.reports[static_cast<size_t>(k)],
                                    result.reports[static_cast<size_t>(k - 1)],
                                    config)) {
      result.converged = true;
      break;
    }
  }

  result.trajectory.q = result.converged ? Q : best_q;
  result.slacks.v = result.converged ? slacks.v : best_v;
  result.slacks.w = result.converged ? slacks.w : best_w;
  return result;
}

LiftedProblem build_problem(const KinematicChain& chain, const TaskSpec& spec) {
  if (spec.horizon < 1) {
    throw std::invalid_argument("task spec horizon must be positive");
  }
  LiftedProblem problem;
  problem.coupling = cumulative_coupling_matrix(chain);
  problem.q_max = chain.q_max();
  problem.constraints.reserve(static_cast<size_t>(spec.horizon));
  for (int t = 0; t < spec.horizon; ++t) {
    if (chain.is_planar()) {
      problem.constraints.emplace_back(compile_planar(chain, spec, t));
    } else {
      problem.constraints.emplace_back(compile_spatial(chain, spec, t));
    }
  }
  return problem;
}

SolveResult solve(const KinematicChain& chain, const TaskSpec& spec,
                  const SolverConfig& config) {
  return solve(build_problem(chain, spec), config);
}

double trajectory_task_residual(const LiftedProblem& problem, const Mat& q) {
  double worst = 0.0;
  for (int t = 0; t < problem.n(); ++t) {
    auto [bv, bw] = slack_targets(problem.coupling, q.row(t).transpose());
    const Vec f =
        constraint_residual(problem.constraints[static_cast<size_t>(t)], bv, bw);
    if (f.size()) {
      worst = std::max(worst, f.lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

}  // namespace tcopt
