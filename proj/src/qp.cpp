#include "ftdnav/qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ftdnav {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
}  // namespace

// Goldfarb-Idnani dual active-set method. Invariant maintained throughout:
// the active constraint normals satisfy N = J^{-T} [R; 0] with J = L^{-T} Q
// for G = L L^T, so primal steps live in the null space of the active set.
QpResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g0,
                  const Eigen::MatrixXd& Ae, const Eigen::VectorXd& be,
                  const Eigen::MatrixXd& Ai, const Eigen::VectorXd& bi) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const int n = static_cast<int>(G.rows());
  const int p = static_cast<int>(Ae.rows());
  const int m = static_cast<int>(Ai.rows());
  if (G.cols() != n || g0.size() != n) throw std::invalid_argument("solve_qp: bad G/g0");
  if ((p > 0 && Ae.cols() != n) || be.size() != p) throw std::invalid_argument("solve_qp: bad Ae/be");
  if ((m > 0 && Ai.cols() != n) || bi.size() != m) throw std::invalid_argument("solve_qp: bad Ai/bi");

  QpResult result;
  result.eq_multipliers = VectorXd::Zero(p);
  result.ineq_multipliers = VectorXd::Zero(m);

  Eigen::LLT<MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("solve_qp: G must be positive definite");
  }

  VectorXd x = llt.solve(-g0);
  MatrixXd J = llt.matrixU().solve(MatrixXd::Identity(n, n));

  MatrixXd R = MatrixXd::Zero(n, n);
  double R_norm = 1.0;

  // Active set entries: values < p are equality rows, p + i inequality row i.
  std::vector<int> active;
  VectorXd u = VectorXd::Zero(p + m + 1);
  int iq = 0;

  VectorXd d(n), z(n), r(n), np(n);

  auto compute_steps = [&]() {
    d = J.transpose() * np;
    z.setZero();
    if (iq < n) z.noalias() = J.rightCols(n - iq) * d.tail(n - iq);
    for (int i = iq - 1; i >= 0; --i) {
      double sum = d(i);
      for (int j = i + 1; j < iq; ++j) sum -= R(i, j) * r(j);
      r(i) = sum / R(i, i);
    }
  };

  // Installs the constraint whose normal produced the current d: reflects
  // d(iq..n-1) onto d(iq), carrying the same reflections into J's columns,
  // then appends d(0..iq) as a new column of R.
  auto add_constraint = [&]() -> bool {
    for (int j = n - 1; j >= iq + 1; --j) {
      const double cc = d(j - 1);
      const double ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      const double c = cc / h;
      const double s = ss / h;
      d(j - 1) = h;
      d(j) = 0.0;
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j - 1);
        const double t2 = J(k, j);
        J(k, j - 1) = c * t1 + s * t2;
        J(k, j) = s * t1 - c * t2;
      }
    }
    if (std::abs(d(iq)) <= kEps * R_norm) return false;  // dependent normal
    for (int i = 0; i <= iq; ++i) R(i, iq) = d(i);
    ++iq;
    R_norm = std::max(R_norm, std::abs(d(iq - 1)));
    return true;
  };

  // Removes active-set position l (never an equality), shifting the later
  // columns of R left and re-triangularizing with the same reflections in J.
  auto delete_constraint = [&](int l) {
    for (int i = l; i < iq - 1; ++i) {
      active[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(i + 1)];
      u(i) = u(i + 1);
      R.col(i) = R.col(i + 1);
    }
    active.pop_back();
    u(iq - 1) = 0.0;
    R.col(iq - 1).setZero();
    --iq;
    for (int j = l; j < iq; ++j) {
      const double cc = R(j, j);
      const double ss = R(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      const double c = cc / h;
      const double s = ss / h;
      R(j, j) = h;
      R(j + 1, j) = 0.0;
      for (int k = j + 1; k < iq; ++k) {
        const double t1 = R(j, k);
        const double t2 = R(j + 1, k);
        R(j, k) = c * t1 + s * t2;
        R(j + 1, k) = s * t1 - c * t2;
      }
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j);
        const double t2 = J(k, j + 1);
        J(k, j) = c * t1 + s * t2;
        J(k, j + 1) = s * t1 - c * t2;
      }
    }
  };

  // Phase 1: equality constraints, added unconditionally.
  for (int i = 0; i < p; ++i) {
    np = Ae.row(i).transpose();
    compute_steps();
    const double resid = np.dot(x) - be(i);
    const double zn = z.dot(np);
    if (zn > kEps * (1.0 + np.squaredNorm())) {
      const double t2 = -resid / zn;
      x += t2 * z;
      u.head(iq) -= t2 * r.head(iq);
      u(iq) = t2;
      active.push_back(i);
      if (!add_constraint()) {
        active.pop_back();
        u(iq) = 0.0;
        if (std::abs(np.dot(x) - be(i)) > 1e-8 * (1.0 + std::abs(be(i)))) {
          return result;  // inconsistent equalities
        }
      }
    } else if (std::abs(resid) > 1e-8 * (1.0 + std::abs(be(i)))) {
      return result;  // normal lies in the active span but residual remains
    }
  }

  // Phase 2: inequality constraints.
  const int max_iter = 20 * (n + m + p) + 100;
  int iter = 0;
  std::vector<char> in_active(static_cast<std::size_t>(m), 0);
  for (int a : active) {
    if (a >= p) in_active[static_cast<std::size_t>(a - p)] = 1;
  }
  const double slack_tol = 1e-9;

  while (true) {
    if (++iter > max_iter) return result;

    int ip = -1;
    double worst = -slack_tol;
    for (int i = 0; i < m; ++i) {
      if (in_active[static_cast<std::size_t>(i)]) continue;
      const double s_i = Ai.row(i).dot(x) - bi(i);
      if (s_i < worst) {
        worst = s_i;
        ip = i;
      }
    }
    if (ip == -1) break;

    np = Ai.row(ip).transpose();
    double u_plus = 0.0;

    while (true) {
      if (++iter > max_iter) return result;
      compute_steps();

      double t1 = kInf;
      int l = -1;
      for (int k = 0; k < iq; ++k) {
        if (active[static_cast<std::size_t>(k)] < p) continue;
        if (r(k) > 0.0 && u(k) / r(k) < t1) {
          t1 = u(k) / r(k);
          l = k;
        }
      }
      const double zn = z.dot(np);
      const double s_ip = np.dot(x) - bi(ip);
      const double t2 =
          zn > kEps * (1.0 + np.squaredNorm()) ? -s_ip / zn : kInf;
      const double t = std::min(t1, t2);
      if (t >= kInf) return result;  // dual unbounded => primal infeasible

      if (t2 >= kInf) {
        // Dual-only step: relax the blocking constraint and retry.
        u.head(iq) -= t * r.head(iq);
        u_plus += t;
        in_active[static_cast<std::size_t>(active[static_cast<std::size_t>(l)] - p)] = 0;
        delete_constraint(l);
        continue;
      }

      x += t * z;
      u.head(iq) -= t * r.head(iq);
      u_plus += t;

      if (t == t2) {
        u(iq) = u_plus;
        active.push_back(p + ip);
        if (add_constraint()) {
          in_active[static_cast<std::size_t>(ip)] = 1;
        } else {
          active.pop_back();
          u(iq) = 0.0;
        }
        break;
      }
      in_active[static_cast<std::size_t>(active[static_cast<std::size_t>(l)] - p)] = 0;
      delete_constraint(l);
    }
  }

  result.x = x;
  for (int k = 0; k < iq; ++k) {
    const int a = active[static_cast<std::size_t>(k)];
    if (a < p) {
      result.eq_multipliers(a) = u(k);
    } else {
      result.ineq_multipliers(a - p) = u(k);
    }
  }
  result.feasible = true;
  result.objective = 0.5 * x.dot(G * x) + g0.dot(x);
  result.iterations = iter;
  return result;
}

}  // namespace ftdnav
