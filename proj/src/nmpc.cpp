#include "ftdnav/nmpc.hpp"
#include <cstdio>
#include <cstdlib>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ftdnav/qp.hpp"

namespace ftdnav {

void NmpcParams::validate() const {
  if (horizon < 1) throw std::invalid_argument("nmpc: horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("nmpc: dt must be > 0");
  if (!(gamma > 0.0) || gamma > 1.0) throw std::invalid_argument("nmpc: gamma must be in (0, 1]");
  if (!(delta_s > 0.0) || !(delta_d >= delta_s)) {
    throw std::invalid_argument("nmpc: require delta_d >= delta_s > 0");
  }
  if ((q_weights.array() < 0.0).any() || (r_weights.array() < 0.0).any() ||
      (w_weights.array() < 0.0).any() || terminal_weight_scale < 0.0) {
    throw std::invalid_argument("nmpc: weights must be nonnegative");
  }
  if (!(v_max > v_min) || !(omega_max > 0.0)) {
    throw std::invalid_argument("nmpc: bad input bounds");
  }
  if (!(band.z_min < band.z_max)) throw std::invalid_argument("nmpc: bad height band");
}

double cbf_h(const Eigen::Vector2d& pos, const CbfConstraint& c, bool next) {
  const Eigen::Vector2d& center = next ? c.center_next : c.center_prev;
  const Eigen::Vector2d e = pos - center;
  return c.inv_metric.x() * e.x() * e.x() + c.inv_metric.y() * e.y() * e.y() -
         c.offset;
}

double cbf_row(const CbfConstraint& c, double gamma,
               const Eigen::Vector2d& p_prev, const Eigen::Vector2d& p_next,
               Eigen::Vector2d* grad_prev, Eigen::Vector2d* grad_next) {
  const double decay = 1.0 - gamma;
  const double value = cbf_h(p_next, c, true) - decay * cbf_h(p_prev, c, false);
  if (grad_next) {
    *grad_next = 2.0 * c.inv_metric.cwiseProduct(p_next - c.center_next);
  }
  if (grad_prev) {
    *grad_prev = -decay * 2.0 * c.inv_metric.cwiseProduct(p_prev - c.center_prev);
  }
  return value;
}

NlpProblem assemble_problem(const RobotState& x0, const RobotState& target,
                            const HistoricalRiskSet& hist,
                            const std::vector<RiskPoint>& dynamic_risks,
                            const std::vector<RobotState>* prev_states,
                            const NmpcParams& params) {
  params.validate();
  if (!std::isfinite(x0.x) || !std::isfinite(x0.y) || !std::isfinite(x0.theta) ||
      !std::isfinite(target.x) || !std::isfinite(target.y) ||
      !std::isfinite(target.theta)) {
    throw std::invalid_argument("assemble_problem: non-finite state or target");
  }
  NlpProblem problem;
  problem.x0 = x0;
  problem.target = target;
  problem.params = params;

  const int N = params.horizon;
  problem.variation_reference.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    if (prev_states != nullptr && !prev_states->empty()) {
      // prev_states[k] already predicts k steps from now.
      const std::size_t idx =
          std::min(static_cast<std::size_t>(k), prev_states->size() - 1);
      problem.variation_reference[static_cast<std::size_t>(k)] = (*prev_states)[idx];
    } else {
      problem.variation_reference[static_cast<std::size_t>(k)] = x0;
    }
  }

  const double ds_sq = params.delta_s * params.delta_s;
  for (const RiskPoint& rp : hist.points()) {
    const Eigen::Vector2d c{rp.position.x, rp.position.y};
    for (int k = 0; k < N; ++k) {
      problem.cbf.push_back(CbfConstraint{k, k + 1, c, c, {1.0, 1.0}, ds_sq});
    }
  }
  const double dd_sq = params.delta_d * params.delta_d;
  for (const RiskPoint& rp : dynamic_risks) {
    if (rp.step < 0 || rp.step >= N) continue;
    const Eigen::Vector2d c{rp.position.x, rp.position.y};
    problem.cbf.push_back(
        CbfConstraint{rp.step - 1, rp.step, c, c, {1.0, 1.0}, dd_sq});
  }
  return problem;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Layout {
  int N;
  int n_var;
  int n_eq;
  int n_in;
  bool state_box;
  int relax_begin;  // first row eligible for elastic relaxation (barriers on)

  explicit Layout(const NlpProblem& p)
      : N(p.params.horizon),
        n_var(3 * (p.params.horizon + 1) + 2 * p.params.horizon) {
    state_box = p.params.pos_bound < 1e6;
    relax_begin = 4 * N + (state_box ? 4 * (N + 1) : 0);
    n_in = relax_begin + static_cast<int>(p.cbf.size()) +
           (p.params.terminal_radius > 0.0 ? 1 : 0);
    n_eq = 3 + 3 * N;
  }

  int xi(int k) const { return 3 * k; }
  int ui(int k) const { return 3 * (N + 1) + 2 * k; }
};

VectorXd pack(const std::vector<RobotState>& states,
              const std::vector<ControlInput>& inputs, const Layout& L) {
  VectorXd z(L.n_var);
  for (int k = 0; k <= L.N; ++k) {
    z(L.xi(k) + 0) = states[static_cast<std::size_t>(k)].x;
    z(L.xi(k) + 1) = states[static_cast<std::size_t>(k)].y;
    z(L.xi(k) + 2) = states[static_cast<std::size_t>(k)].theta;
  }
  for (int k = 0; k < L.N; ++k) {
    z(L.ui(k) + 0) = inputs[static_cast<std::size_t>(k)].v;
    z(L.ui(k) + 1) = inputs[static_cast<std::size_t>(k)].omega;
  }
  return z;
}

// Objective value and (optionally) gradient. The heading error is wrapped so
// the target cost has no 2*pi cliffs.
double objective(const NlpProblem& p, const Layout& L, const VectorXd& z,
                 VectorXd* grad) {
  const Eigen::Vector3d q = p.params.q_weights;
  const Eigen::Vector3d qn = p.params.terminal_weight_scale * q;
  const Eigen::Vector2d r = p.params.r_weights;
  const Eigen::Vector3d w = p.params.w_weights;
  if (grad) grad->setZero();

  double cost = 0.0;
  for (int k = 0; k <= L.N; ++k) {
    const bool terminal = (k == L.N);
    const Eigen::Vector3d wt = terminal ? qn : q;
    const double ex = p.target.x - z(L.xi(k) + 0);
    const double ey = p.target.y - z(L.xi(k) + 1);
    const double et = wrap_angle(p.target.theta - z(L.xi(k) + 2));
    cost += wt.x() * ex * ex + wt.y() * ey * ey + wt.z() * et * et;
    if (grad) {
      (*grad)(L.xi(k) + 0) += -2.0 * wt.x() * ex;
      (*grad)(L.xi(k) + 1) += -2.0 * wt.y() * ey;
      (*grad)(L.xi(k) + 2) += -2.0 * wt.z() * et;
    }
    if (!terminal) {
      const RobotState& ref = p.variation_reference[static_cast<std::size_t>(k)];
      const double vx = z(L.xi(k) + 0) - ref.x;
      const double vy = z(L.xi(k) + 1) - ref.y;
      const double vt = wrap_angle(z(L.xi(k) + 2) - ref.theta);
      cost += w.x() * vx * vx + w.y() * vy * vy + w.z() * vt * vt;
      if (grad) {
        (*grad)(L.xi(k) + 0) += 2.0 * w.x() * vx;
        (*grad)(L.xi(k) + 1) += 2.0 * w.y() * vy;
        (*grad)(L.xi(k) + 2) += 2.0 * w.z() * vt;
      }
      const double uv = z(L.ui(k) + 0);
      const double uo = z(L.ui(k) + 1);
      cost += r.x() * uv * uv + r.y() * uo * uo;
      if (grad) {
        (*grad)(L.ui(k) + 0) += 2.0 * r.x() * uv;
        (*grad)(L.ui(k) + 1) += 2.0 * r.y() * uo;
      }
    }
  }
  return cost;
}

// Diagonal of the (exact) objective Hessian.
VectorXd objective_hessian_diag(const NlpProblem& p, const Layout& L) {
  VectorXd diag(L.n_var);
  const Eigen::Vector3d q = p.params.q_weights;
  const Eigen::Vector3d qn = p.params.terminal_weight_scale * q;
  const Eigen::Vector3d w = p.params.w_weights;
  const Eigen::Vector2d r = p.params.r_weights;
  for (int k = 0; k <= L.N; ++k) {
    const Eigen::Vector3d s = (k == L.N) ? qn : Eigen::Vector3d(q + w);
    diag.segment<3>(L.xi(k)) = 2.0 * s;
  }
  for (int k = 0; k < L.N; ++k) {
    diag.segment<2>(L.ui(k)) = 2.0 * r;
  }
  diag.array() += 1e-9;  // keep strictly positive definite
  return diag;
}

// Hessian model at z with the given (lagged) multipliers: the exact
// Lagrangian curvature of the barrier and dynamics constraints, clamped
// per coordinate so the matrix stays positive definite by construction.
// Multipliers enter with the convention L = f - nu'c_eq - lambda'c_in.
MatrixXd lagrangian_hessian(const NlpProblem& p, const Layout& L,
                            const VectorXd& z, const VectorXd& eq_mult,
                            const VectorXd& in_mult) {
  const VectorXd base = objective_hessian_diag(p, L);
  VectorXd diag = base;
  const double dt = p.params.dt;

  if (in_mult.size() == L.n_in) {
    const double decay = 1.0 - p.params.gamma;
    for (std::size_t i = 0; i < p.cbf.size(); ++i) {
      const double lam = in_mult(L.relax_begin + static_cast<int>(i));
      if (lam <= 0.0) continue;
      const CbfConstraint& cb = p.cbf[i];
      diag(L.xi(cb.k_next) + 0) -= 2.0 * lam * cb.inv_metric.x();
      diag(L.xi(cb.k_next) + 1) -= 2.0 * lam * cb.inv_metric.y();
      if (cb.k_prev >= 0) {
        diag(L.xi(cb.k_prev) + 0) += 2.0 * decay * lam * cb.inv_metric.x();
        diag(L.xi(cb.k_prev) + 1) += 2.0 * decay * lam * cb.inv_metric.y();
      }
    }
    if (p.params.terminal_radius > 0.0) {
      const double lam = in_mult(L.n_in - 1);
      diag(L.xi(L.N) + 0) += 2.0 * lam;
      diag(L.xi(L.N) + 1) += 2.0 * lam;
    }
  }
  if (eq_mult.size() == L.n_eq) {
    for (int k = 0; k < L.N; ++k) {
      const double nx = eq_mult(3 + 3 * k + 0);
      const double ny = eq_mult(3 + 3 * k + 1);
      const double th = z(L.xi(k) + 2);
      const double v = z(L.ui(k) + 0);
      // -nu'(x_next - f) contributes +nu' grad^2 f.
      diag(L.xi(k) + 2) +=
          nx * (-std::cos(th) * v * dt) + ny * (-std::sin(th) * v * dt);
    }
  }
  // Indefinite directions fall back toward the objective curvature.
  diag = diag.cwiseMax(0.3 * base);

  MatrixXd H = MatrixXd::Zero(L.n_var, L.n_var);
  H.diagonal() = diag;
  if (eq_mult.size() == L.n_eq) {
    for (int k = 0; k < L.N; ++k) {
      const double nx = eq_mult(3 + 3 * k + 0);
      const double ny = eq_mult(3 + 3 * k + 1);
      const double th = z(L.xi(k) + 2);
      double cross = nx * (-std::sin(th) * dt) + ny * (std::cos(th) * dt);
      // Keep each (theta_k, v_k) block positive definite.
      const double cap =
          0.9 * std::sqrt(diag(L.xi(k) + 2) * diag(L.ui(k) + 0));
      cross = std::clamp(cross, -cap, cap);
      H(L.xi(k) + 2, L.ui(k) + 0) = cross;
      H(L.ui(k) + 0, L.xi(k) + 2) = cross;
    }
  }
  return H;
}

void equality_constraints(const NlpProblem& p, const Layout& L,
                          const VectorXd& z, VectorXd& c, MatrixXd* A) {
  const double dt = p.params.dt;
  c.resize(L.n_eq);
  if (A) {
    A->resize(L.n_eq, L.n_var);
    A->setZero();
  }
  c(0) = z(L.xi(0) + 0) - p.x0.x;
  c(1) = z(L.xi(0) + 1) - p.x0.y;
  c(2) = z(L.xi(0) + 2) - p.x0.theta;
  if (A) {
    (*A)(0, L.xi(0) + 0) = 1.0;
    (*A)(1, L.xi(0) + 1) = 1.0;
    (*A)(2, L.xi(0) + 2) = 1.0;
  }
  for (int k = 0; k < L.N; ++k) {
    const int row = 3 + 3 * k;
    const double th = z(L.xi(k) + 2);
    const double v = z(L.ui(k) + 0);
    const double om = z(L.ui(k) + 1);
    c(row + 0) = z(L.xi(k + 1) + 0) - (z(L.xi(k) + 0) + std::cos(th) * v * dt);
    c(row + 1) = z(L.xi(k + 1) + 1) - (z(L.xi(k) + 1) + std::sin(th) * v * dt);
    c(row + 2) = z(L.xi(k + 1) + 2) - (z(L.xi(k) + 2) + om * dt);
    if (A) {
      for (int a = 0; a < 3; ++a) (*A)(row + a, L.xi(k + 1) + a) = 1.0;
      (*A)(row + 0, L.xi(k) + 0) = -1.0;
      (*A)(row + 0, L.xi(k) + 2) = std::sin(th) * v * dt;
      (*A)(row + 0, L.ui(k) + 0) = -std::cos(th) * dt;
      (*A)(row + 1, L.xi(k) + 1) = -1.0;
      (*A)(row + 1, L.xi(k) + 2) = -std::cos(th) * v * dt;
      (*A)(row + 1, L.ui(k) + 0) = -std::sin(th) * dt;
      (*A)(row + 2, L.xi(k) + 2) = -1.0;
      (*A)(row + 2, L.ui(k) + 1) = -dt;
    }
  }
}

void inequality_constraints(const NlpProblem& p, const Layout& L,
                            const VectorXd& z, VectorXd& c, MatrixXd* A) {
  c.resize(L.n_in);
  if (A) {
    A->resize(L.n_in, L.n_var);
    A->setZero();
  }
  int row = 0;
  for (int k = 0; k < L.N; ++k) {
    const double v = z(L.ui(k) + 0);
    const double om = z(L.ui(k) + 1);
    c(row) = v - p.params.v_min;
    if (A) (*A)(row, L.ui(k) + 0) = 1.0;
    ++row;
    c(row) = p.params.v_max - v;
    if (A) (*A)(row, L.ui(k) + 0) = -1.0;
    ++row;
    c(row) = om + p.params.omega_max;
    if (A) (*A)(row, L.ui(k) + 1) = 1.0;
    ++row;
    c(row) = p.params.omega_max - om;
    if (A) (*A)(row, L.ui(k) + 1) = -1.0;
    ++row;
  }
  if (L.state_box) {
    for (int k = 0; k <= L.N; ++k) {
      for (int axis = 0; axis < 2; ++axis) {
        const double val = z(L.xi(k) + axis);
        c(row) = val + p.params.pos_bound;
        if (A) (*A)(row, L.xi(k) + axis) = 1.0;
        ++row;
        c(row) = p.params.pos_bound - val;
        if (A) (*A)(row, L.xi(k) + axis) = -1.0;
        ++row;
      }
    }
  }
  for (const CbfConstraint& cb : p.cbf) {
    const Eigen::Vector2d pn{z(L.xi(cb.k_next) + 0), z(L.xi(cb.k_next) + 1)};
    const Eigen::Vector2d pp =
        cb.k_prev < 0
            ? Eigen::Vector2d{p.x0.x, p.x0.y}
            : Eigen::Vector2d{z(L.xi(cb.k_prev) + 0), z(L.xi(cb.k_prev) + 1)};
    Eigen::Vector2d gp, gn;
    c(row) = cbf_row(cb, p.params.gamma, pp, pn, &gp, &gn);
    if (A) {
      (*A)(row, L.xi(cb.k_next) + 0) += gn.x();
      (*A)(row, L.xi(cb.k_next) + 1) += gn.y();
      if (cb.k_prev >= 0) {
        (*A)(row, L.xi(cb.k_prev) + 0) += gp.x();
        (*A)(row, L.xi(cb.k_prev) + 1) += gp.y();
      }
    }
    ++row;
  }
  if (p.params.terminal_radius > 0.0) {
    const double ex = z(L.xi(L.N) + 0) - p.target.x;
    const double ey = z(L.xi(L.N) + 1) - p.target.y;
    c(row) = p.params.terminal_radius * p.params.terminal_radius -
             (ex * ex + ey * ey);
    if (A) {
      (*A)(row, L.xi(L.N) + 0) = -2.0 * ex;
      (*A)(row, L.xi(L.N) + 1) = -2.0 * ey;
    }
    ++row;
  }
}

double merit(const NlpProblem& p, const Layout& L, const VectorXd& z,
             double mu, VectorXd& ce_buf, VectorXd& ci_buf) {
  const double f = objective(p, L, z, nullptr);
  equality_constraints(p, L, z, ce_buf, nullptr);
  inequality_constraints(p, L, z, ci_buf, nullptr);
  const double viol =
      ce_buf.cwiseAbs().sum() + (-ci_buf.cwiseMin(0.0)).sum();
  return f + mu * viol;
}

NmpcSolution extract(const NlpProblem& p, const Layout& L, const VectorXd& z) {
  NmpcSolution sol;
  sol.inputs.resize(static_cast<std::size_t>(L.N));
  for (int k = 0; k < L.N; ++k) {
    sol.inputs[static_cast<std::size_t>(k)] =
        ControlInput{std::clamp(z(L.ui(k) + 0), p.params.v_min, p.params.v_max),
                     std::clamp(z(L.ui(k) + 1), -p.params.omega_max,
                                p.params.omega_max)};
  }
  // Exact rollout: the published states satisfy the shooting equalities by
  // construction.
  sol.states.resize(static_cast<std::size_t>(L.N + 1));
  sol.states[0] = RobotState{p.x0.x, p.x0.y, wrap_angle(p.x0.theta)};
  for (int k = 0; k < L.N; ++k) {
    sol.states[static_cast<std::size_t>(k + 1)] = dynamics_step(
        sol.states[static_cast<std::size_t>(k)],
        sol.inputs[static_cast<std::size_t>(k)], p.params.dt);
  }
  return sol;
}

}  // namespace

namespace {

// Projects an iterate onto the dynamics manifold: inputs are clamped to
// their boxes and the states replaced by their exact (unwrapped) rollout
// from x0. Keeping iterates dynamics-consistent removes the equality
// violations from the merit function and sidesteps the Maratos effect.
VectorXd project_rollout(const NlpProblem& p, const Layout& L,
                         const VectorXd& z) {
  VectorXd out = z;
  const double dt = p.params.dt;
  out(L.xi(0) + 0) = p.x0.x;
  out(L.xi(0) + 1) = p.x0.y;
  out(L.xi(0) + 2) = p.x0.theta;
  for (int k = 0; k < L.N; ++k) {
    const double v =
        std::clamp(out(L.ui(k) + 0), p.params.v_min, p.params.v_max);
    const double om =
        std::clamp(out(L.ui(k) + 1), -p.params.omega_max, p.params.omega_max);
    out(L.ui(k) + 0) = v;
    out(L.ui(k) + 1) = om;
    const double th = out(L.xi(k) + 2);
    out(L.xi(k + 1) + 0) = out(L.xi(k) + 0) + std::cos(th) * v * dt;
    out(L.xi(k + 1) + 1) = out(L.xi(k) + 1) + std::sin(th) * v * dt;
    out(L.xi(k + 1) + 2) = th + om * dt;
  }
  return out;
}

}  // namespace

NmpcSolution solve(const NlpProblem& problem, const NmpcSolution* warm_start) {
  const auto t_begin = std::chrono::steady_clock::now();
  problem.params.validate();
  const Layout L(problem);
  const int N = L.N;

  NmpcSolution failed;
  failed.status = SolveStatus::kFailed;

  // Initial iterate.
  std::vector<RobotState> states0;
  std::vector<ControlInput> inputs0;
  if (warm_start != nullptr &&
      warm_start->states.size() == static_cast<std::size_t>(N + 1) &&
      warm_start->inputs.size() == static_cast<std::size_t>(N)) {
    states0 = warm_start->states;
    inputs0 = warm_start->inputs;
    states0[0] = problem.x0;
  } else {
    states0.assign(static_cast<std::size_t>(N + 1), problem.x0);
    inputs0.assign(static_cast<std::size_t>(N), ControlInput{});
  }
  VectorXd z = project_rollout(problem, L, pack(states0, inputs0, L));

  VectorXd grad(L.n_var), c_eq, c_in;
  MatrixXd A_eq, A_in;
  VectorXd ce_buf, ci_buf;
  VectorXd last_eq_mult, last_in_mult;

  double mu = 10.0;
  int iterations = 0;
  bool converged = false;

  for (int iter = 0; iter < problem.params.max_sqp_iterations; ++iter) {
    iterations = iter + 1;
    objective(problem, L, z, &grad);
    equality_constraints(problem, L, z, c_eq, &A_eq);
    inequality_constraints(problem, L, z, c_in, &A_in);

    const MatrixXd H =
        lagrangian_hessian(problem, L, z, last_eq_mult, last_in_mult);

    // Barrier rows with comfortable slack cannot activate at the step scale
    // of one iteration; solving the subproblem on the near-active subset
    // keeps the QP small in point-dense scenes. Pruned rows keep a zero
    // multiplier, which is exactly their KKT value while inactive.
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(L.n_in));
    for (int i = 0; i < L.relax_begin; ++i) rows.push_back(i);
    for (int i = L.relax_begin; i < L.n_in; ++i) {
      if (c_in(i) < 1.0) rows.push_back(i);
    }
    const int n_rows = static_cast<int>(rows.size());
    MatrixXd A_qp(n_rows, L.n_var);
    VectorXd c_qp(n_rows);
    for (int r = 0; r < n_rows; ++r) {
      A_qp.row(r) = A_in.row(rows[static_cast<std::size_t>(r)]);
      c_qp(r) = c_in(rows[static_cast<std::size_t>(r)]);
    }

    QpResult qp = solve_qp(H, grad, A_eq, -c_eq, A_qp, -c_qp);
    bool elastic = false;
    double slack_total = 0.0;
    if (!qp.feasible) {
      // The linearized barrier rows can be jointly inconsistent with the
      // bounded inputs when the iterate penetrates deeply. Retry with
      // l1-penalized per-row slacks on the barrier rows near violation;
      // the slacks only shape this subproblem, converged solutions never
      // carry one.
      std::vector<int> slacked;  // positions within `rows`
      for (int r = 0; r < n_rows; ++r) {
        if (rows[static_cast<std::size_t>(r)] >= L.relax_begin && c_qp(r) < 0.1) {
          slacked.push_back(r);
        }
      }
      for (int attempt = 0; attempt < 2 && !qp.feasible; ++attempt) {
        if (attempt == 1) {
          slacked.clear();
          for (int r = 0; r < n_rows; ++r) {
            if (rows[static_cast<std::size_t>(r)] >= L.relax_begin) slacked.push_back(r);
          }
        }
        const int ns = static_cast<int>(slacked.size());
        if (ns == 0) break;
        const int n2 = L.n_var + ns;
        MatrixXd H2 = MatrixXd::Zero(n2, n2);
        H2.topLeftCorner(L.n_var, L.n_var) = H;
        H2.bottomRightCorner(ns, ns).diagonal().setConstant(1e-2);
        VectorXd g2(n2);
        g2.head(L.n_var) = grad;
        g2.tail(ns).setConstant(10.0 * mu);
        MatrixXd Ae2 = MatrixXd::Zero(L.n_eq, n2);
        Ae2.leftCols(L.n_var) = A_eq;
        MatrixXd Ai2 = MatrixXd::Zero(n_rows + ns, n2);
        Ai2.topLeftCorner(n_rows, L.n_var) = A_qp;
        VectorXd bi2 = VectorXd::Zero(n_rows + ns);
        bi2.head(n_rows) = -c_qp;
        for (int s = 0; s < ns; ++s) {
          Ai2(slacked[static_cast<std::size_t>(s)], L.n_var + s) = 1.0;
          Ai2(n_rows + s, L.n_var + s) = 1.0;  // slack >= 0
        }
        qp = solve_qp(H2, g2, Ae2, -c_eq, Ai2, bi2);
        if (qp.feasible) {
          slack_total = qp.x.tail(ns).sum();
          elastic = true;
        }
      }
      if (!qp.feasible) {
        failed.iterations = iterations;
        failed.solve_time_s = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t_begin)
                                  .count();
        return failed;
      }
    }
    const VectorXd d = qp.x.head(L.n_var);
    VectorXd in_mult = VectorXd::Zero(L.n_in);
    for (int r = 0; r < n_rows; ++r) {
      in_mult(rows[static_cast<std::size_t>(r)]) = qp.ineq_multipliers(r);
    }
    last_eq_mult = qp.eq_multipliers;
    last_in_mult = in_mult;

    const double viol_eq = c_eq.size() ? c_eq.cwiseAbs().maxCoeff() : 0.0;
    const double viol_in = c_in.size() ? std::max(0.0, -c_in.minCoeff()) : 0.0;

    // KKT certificate: feasible, stationary with the QP multipliers, and
    // complementary. The multipliers are dual-feasible by construction.
    if (!elastic && viol_eq <= problem.params.tol_equality &&
        viol_in <= problem.params.tol_inequality) {
      VectorXd stat = grad;
      if (c_eq.size()) stat -= A_eq.transpose() * qp.eq_multipliers;
      if (c_in.size()) stat -= A_in.transpose() * in_mult;
      double comp = 0.0;
      for (int i = 0; i < c_in.size(); ++i) {
        comp = std::max(comp, in_mult(i) * std::abs(c_in(i)));
      }
      const double scale = 1.0 + grad.lpNorm<Eigen::Infinity>();
      if (stat.lpNorm<Eigen::Infinity>() <=
              problem.params.tol_stationarity * scale &&
          comp <= 1e-6 * scale) {
        converged = true;
        break;
      }
    }

    // Exact-penalty parameter must dominate the multipliers.
    double lambda_max = 0.0;
    if (qp.eq_multipliers.size()) {
      lambda_max = qp.eq_multipliers.cwiseAbs().maxCoeff();
    }
    if (in_mult.size()) {
      lambda_max = std::max(lambda_max, in_mult.cwiseAbs().maxCoeff());
    }
    mu = std::max(mu, 1.5 * lambda_max + 1.0);

    const double viol_l1 = c_eq.cwiseAbs().sum() + (-c_in.cwiseMin(0.0)).sum();
    const double phi0 = objective(problem, L, z, nullptr) + mu * viol_l1;
    // The QP removes the linearized violation except what the slacks carry.
    const double dphi =
        grad.dot(d) - mu * std::max(viol_l1 - slack_total, 0.0);

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      const VectorXd trial = project_rollout(problem, L, z + alpha * d);
      const double phi = merit(problem, L, trial, mu, ce_buf, ci_buf);
      if (phi <= phi0 + 1e-4 * alpha * std::min(dphi, 0.0)) {
        z = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (std::getenv("FTDNAV_SQP_TRACE")) {
      std::fprintf(stderr,
                   "[sqp %d] viol_eq=%.2e viol_in=%.2e |d|=%.2e mu=%.1f "
                   "alpha=%.4g acc=%d el=%d qpi=%d\n",
                   iter, viol_eq, viol_in, d.lpNorm<Eigen::Infinity>(), mu,
                   alpha, accepted ? 1 : 0, elastic ? 1 : 0, qp.iterations);
    }
    if (!accepted) {
      break;  // merit could not be reduced along the QP direction
    }
    if (alpha * d.lpNorm<Eigen::Infinity>() < 1e-13) {
      break;  // no representable progress left
    }
  }

  if (!converged) {
    failed.iterations = iterations;
    failed.solve_time_s = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t_begin)
                              .count();
    return failed;
  }

  NmpcSolution sol = extract(problem, L, z);
  // Verify the published trajectory (exact rollout) still satisfies every
  // inequality to tolerance; tiny shooting gaps may shift the states.
  const VectorXd z_final = pack(sol.states, sol.inputs, L);
  inequality_constraints(problem, L, z_final, c_in, nullptr);
  const double final_viol = c_in.size() ? std::max(0.0, -c_in.minCoeff()) : 0.0;
  if (final_viol > 1e-6) {
    failed.iterations = iterations;
    failed.solve_time_s = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t_begin)
                              .count();
    return failed;
  }
  sol.cost = objective(problem, L, z_final, nullptr);
  sol.status = SolveStatus::kSolved;
  sol.iterations = iterations;
  sol.solve_time_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t_begin)
                         .count();
  return sol;
}

ControlInput fallback_control(const FallbackBuffer& buffer) {
  if (!buffer.last_success.has_value()) return ControlInput{0.0, 0.0};
  const auto& inputs = buffer.last_success->inputs;
  const int dT = buffer.steps_since_success;
  if (dT < 0 || dT >= static_cast<int>(inputs.size())) {
    return ControlInput{0.0, 0.0};
  }
  return inputs[static_cast<std::size_t>(dT)];
}

Planner::Planner(NmpcParams params, RiskParams risk_params)
    : params_(std::move(params)), risk_params_(risk_params), hist_(risk_params) {
  params_.validate();
}

void Planner::reset() {
  hist_ = HistoricalRiskSet(risk_params_);
  fallback_ = FallbackBuffer{};
  prev_states_.clear();
}

PlanStepResult Planner::plan_step(const RobotState& x0, const RobotState& target,
                                  const FtdMap& map, double now) {
  const auto t_begin = std::chrono::steady_clock::now();
  const int N = params_.horizon;
  PlanStepResult result;

  // Previous prediction; a cold start degenerates to the current pose.
  PredictedTrajectory prev;
  prev.solve_time = now - params_.dt;
  if (prev_states_.empty()) {
    prev.states.assign(static_cast<std::size_t>(N + 1), x0);
  } else {
    prev.states = prev_states_;
  }

  const std::vector<RiskPoint> new_static =
      identify_static_risk(map, prev, params_.delta_s, params_.band, now);
  hist_.update(new_static, x0.x, x0.y, now);
  const std::vector<RiskPoint> dynamic_risks =
      identify_dynamic_risks(map, prev, params_.delta_d, params_.band);
  result.static_risk_count = static_cast<int>(hist_.size());
  result.dynamic_risk_count = static_cast<int>(dynamic_risks.size());

  // Shift the previous cycle's plan one step forward: entry k then predicts
  // k steps from now. Doubles as warm start and prediction-variation
  // reference.
  std::vector<RobotState> shifted_states;
  NmpcSolution warm;
  bool have_warm = false;
  if (!prev_states_.empty()) {
    shifted_states.resize(static_cast<std::size_t>(N + 1));
    for (int k = 0; k <= N; ++k) {
      const std::size_t idx =
          std::min(static_cast<std::size_t>(k + 1), prev_states_.size() - 1);
      shifted_states[static_cast<std::size_t>(k)] = prev_states_[idx];
    }
    if (!prev_inputs_.empty()) {
      warm.states = shifted_states;
      warm.inputs.resize(static_cast<std::size_t>(N));
      for (int k = 0; k < N; ++k) {
        const std::size_t idx =
            std::min(static_cast<std::size_t>(k + 1), prev_inputs_.size() - 1);
        warm.inputs[static_cast<std::size_t>(k)] = prev_inputs_[idx];
      }
      have_warm = true;
    }
  }

  std::vector<RiskPoint> active_dynamic = dynamic_risks;
  NlpProblem problem = assemble_problem(
      x0, target, hist_, active_dynamic,
      shifted_states.empty() ? nullptr : &shifted_states, params_);
  NmpcSolution sol = solve(problem, have_warm ? &warm : nullptr);
  if (sol.status == SolveStatus::kFailed && have_warm &&
      params_.max_sqp_iterations > 0) {
    // A stale warm start can violate newly registered barriers too deeply to
    // recover from; the stop-in-place cold start is feasible whenever the
    // current pose is safe.
    NmpcSolution cold = solve(problem, nullptr);
    cold.solve_time_s += sol.solve_time_s;
    cold.iterations += sol.iterations;
    sol = cold;
  }

  // The fresh prediction may clip map points that were not constraints yet
  // (they only become risk points one cycle later otherwise, and the robot
  // can cover a full step before that). Re-check it against the map and
  // re-solve once with the newly registered points.
  for (int pass = 0; pass < 2 && sol.status == SolveStatus::kSolved; ++pass) {
    PredictedTrajectory fresh;
    fresh.states = sol.states;
    fresh.solve_time = now;
    // Sweep every step here: sparse registration lets the executed path sag
    // toward the unregistered surface between two retained points.
    std::vector<RiskPoint> extra_static;
    const int steps =
        std::min<int>(map.horizon(), static_cast<int>(fresh.states.size()));
    for (int k = 0; k < steps; ++k) {
      const RobotState& s = fresh.states[static_cast<std::size_t>(k)];
      if (const auto hit =
              map.static_collision(s.x, s.y, params_.band, params_.delta_s)) {
        extra_static.push_back(
            RiskPoint{hit->point, RiskKind::kStatic, -1, now});
      }
    }
    const std::vector<RiskPoint> extra_dynamic =
        identify_dynamic_risks(map, fresh, params_.delta_d, params_.band);
    const std::size_t hist_before = hist_.size();
    hist_.update(extra_static, x0.x, x0.y, now);
    bool changed = hist_.size() != hist_before;
    for (const RiskPoint& rp : extra_dynamic) {
      const bool seen = std::any_of(
          active_dynamic.begin(), active_dynamic.end(),
          [&](const RiskPoint& q) { return q.step == rp.step; });
      if (!seen) {
        active_dynamic.push_back(rp);
        changed = true;
      }
    }
    if (!changed) break;
    problem = assemble_problem(x0, target, hist_, active_dynamic,
                               shifted_states.empty() ? nullptr : &shifted_states,
                               params_);
    NmpcSolution refined = solve(problem, &sol);
    if (refined.status == SolveStatus::kFailed) {
      refined = solve(problem, nullptr);
    }
    refined.solve_time_s += sol.solve_time_s;
    sol = refined;
  }
  result.static_risk_count = static_cast<int>(hist_.size());
  result.dynamic_risk_count = static_cast<int>(active_dynamic.size());

  // Stationary points pressed against a barrier are legitimate local optima
  // of the horizon problem; rotated restarts let the solver compare basins
  // that a warm start cannot reach.
  const double goal_dist = std::hypot(target.x - x0.x, target.y - x0.y);
  if (sol.status == SolveStatus::kSolved &&
      std::abs(sol.inputs.front().v) < 0.05 && goal_dist > 0.8) {
    stall_cycles_ += 1;
  } else {
    stall_cycles_ = 0;
  }
  if (stall_cycles_ >= 5 && stall_cycles_ % 5 == 0 &&
      sol.status == SolveStatus::kSolved) {
    double best_cost = sol.cost;
    NlpProblem kick_problem = problem;
    kick_problem.params.max_sqp_iterations =
        std::min(kick_problem.params.max_sqp_iterations, 25);
    for (const double offset : {1.5707963267948966, -1.5707963267948966,
                                2.6179938779914944, -2.6179938779914944}) {
      NmpcSolution kick;
      kick.states.resize(static_cast<std::size_t>(N + 1));
      kick.inputs.resize(static_cast<std::size_t>(N));
      const int rot_steps = std::max(
          1, static_cast<int>(std::ceil(std::abs(offset) /
                                        (params_.omega_max * params_.dt))));
      kick.states[0] = x0;
      for (int k = 0; k < N; ++k) {
        const bool rotating = k < rot_steps;
        kick.inputs[static_cast<std::size_t>(k)] =
            rotating ? ControlInput{0.0, offset > 0 ? params_.omega_max
                                                    : -params_.omega_max}
                     : ControlInput{0.8 * params_.v_max, 0.0};
        kick.states[static_cast<std::size_t>(k + 1)] = dynamics_step(
            kick.states[static_cast<std::size_t>(k)],
            kick.inputs[static_cast<std::size_t>(k)], params_.dt);
      }
      NmpcSolution candidate = solve(kick_problem, &kick);
      if (candidate.status == SolveStatus::kSolved &&
          candidate.cost < best_cost - 1e-6) {
        best_cost = candidate.cost;
        candidate.solve_time_s += sol.solve_time_s;
        sol = candidate;
      }
    }
  }
  result.solution = sol;

  if (sol.status == SolveStatus::kSolved) {
    result.solved = true;
    result.applied = sol.inputs.front();
    fallback_.last_success = sol;
    fallback_.success_time = now;
    fallback_.steps_since_success = 0;
    prev_states_ = sol.states;
    prev_inputs_ = sol.inputs;

    // Decay margin of the accepted trajectory against every retained static
    // risk point (diagnostics for the safety analysis).
    const double decay = 1.0 - params_.gamma;
    for (const RiskPoint& rp : hist_.points()) {
      for (int k = 0; k < N; ++k) {
        const double h_k = barrier_value(sol.states[static_cast<std::size_t>(k)].x,
                                         sol.states[static_cast<std::size_t>(k)].y,
                                         rp.position, params_.delta_s);
        const double h_k1 =
            barrier_value(sol.states[static_cast<std::size_t>(k + 1)].x,
                          sol.states[static_cast<std::size_t>(k + 1)].y,
                          rp.position, params_.delta_s);
        result.min_static_cbf_margin =
            std::min(result.min_static_cbf_margin, h_k1 - decay * h_k);
      }
    }
  } else {
    fallback_.steps_since_success += 1;
    result.applied = fallback_control(fallback_);
    result.fallback_exhausted =
        !fallback_.last_success.has_value() ||
        fallback_.steps_since_success >=
            static_cast<int>(fallback_.last_success->inputs.size());
    // Keep the stale plan aligned with time for the next risk scan.
    if (!prev_states_.empty()) {
      for (std::size_t k = 0; k + 1 < prev_states_.size(); ++k) {
        prev_states_[k] = prev_states_[k + 1];
      }
      for (std::size_t k = 0; k + 1 < prev_inputs_.size(); ++k) {
        prev_inputs_[k] = prev_inputs_[k + 1];
      }
    }
  }

  result.cycle_time_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t_begin)
                            .count();
  return result;
}

}  // namespace ftdnav
