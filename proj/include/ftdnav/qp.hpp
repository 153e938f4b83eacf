#pragma once

#include <Eigen/Dense>

namespace ftdnav {

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd eq_multipliers;    // one per equality row
  Eigen::VectorXd ineq_multipliers;  // one per inequality row, 0 if inactive
  bool feasible{false};
  double objective{0.0};
  int iterations{0};
};

/// Strictly convex dense QP
///   min 0.5 x'Gx + g0'x   s.t.  Ae x = be,  Ai x >= bi
/// solved with the Goldfarb-Idnani dual active-set method. G must be
/// symmetric positive definite. Infeasible problems (including inconsistent
/// equalities) come back with feasible == false.
QpResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g0,
                  const Eigen::MatrixXd& Ae, const Eigen::VectorXd& be,
                  const Eigen::MatrixXd& Ai, const Eigen::VectorXd& bi);

}  // namespace ftdnav
