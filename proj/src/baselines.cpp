#include "ftdnav/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ftdnav/perception.hpp"

namespace ftdnav {

DepthCbfQpResult depth_cbf_qp_control(const RobotState& x, const FtdMap& map,
                                      double goal_x, double goal_y,
                                      const DepthCbfQpParams& gains,
                                      const NmpcParams& limits) {
  DepthCbfQpResult result;
  const double dx = goal_x - x.x;
  const double dy = goal_y - x.y;
  const double dist = std::hypot(dx, dy);
  const double alpha = wrap_angle(std::atan2(dy, dx) - x.theta);

  const double v_lo = std::max(limits.v_min, 0.0);
  const double v_hi = limits.v_max;
  double v_nom = std::clamp(gains.k_v * dist * std::cos(alpha), v_lo, v_hi);
  const double omega =
      std::clamp(gains.k_omega * alpha, -limits.omega_max, limits.omega_max);

  const auto hit = map.nearest_at_step(0, x.x, x.y, limits.band);
  if (!hit) {
    result.input = ControlInput{v_nom, omega};
    return result;
  }

  // One-step decay condition on the closest point p*:
  //   h(p + v dt e) >= (1 - gamma) h(p)
  // expands to a v^2 + b v + c >= 0 with a = dt^2 > 0.
  const double dt = limits.dt;
  const double ex = std::cos(x.theta);
  const double ey = std::sin(x.theta);
  const double rx = x.x - hit->point.x;
  const double ry = x.y - hit->point.y;
  const double h = (rx * rx + ry * ry) - limits.delta_s * limits.delta_s;
  const double a = dt * dt;
  const double b = 2.0 * dt * (ex * rx + ey * ry);
  const double c = limits.gamma * h;

  const double disc = b * b - 4.0 * a * c;
  double v = v_nom;
  bool feasible = true;
  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double r1 = (-b - sq) / (2.0 * a);
    const double r2 = (-b + sq) / (2.0 * a);
    const bool nominal_ok = v_nom <= r1 || v_nom >= r2;
    if (!nominal_ok) {
      // Closest admissible v inside the box, checking both branches.
      double best = std::numeric_limits<double>::quiet_NaN();
      double best_err = std::numeric_limits<double>::infinity();
      if (r1 >= v_lo) {
        const double cand = std::min(r1, v_hi);
        const double err = std::abs(cand - v_nom);
        if (err < best_err) { best = cand; best_err = err; }
      }
      if (r2 <= v_hi) {
        const double cand = std::max(r2, v_lo);
        const double err = std::abs(cand - v_nom);
        if (err < best_err) { best = cand; best_err = err; }
      }
      if (std::isnan(best)) {
        feasible = false;
      } else {
        v = best;
        result.constraint_active = true;
      }
    }
  }

  if (!feasible) {
    result.input = ControlInput{0.0, 0.0};
    result.feasible = false;
  } else {
    result.input = ControlInput{v, omega};
  }
  return result;
}

std::vector<ObstacleEllipse> fit_obstacle_ellipses(
    const PointCloud& static_cloud, double eps, int min_pts,
    const std::vector<ObstacleTrack>& tracks, double margin) {
  std::vector<ObstacleEllipse> out;
  const double root2 = std::sqrt(2.0);

  if (!static_cloud.empty()) {
    const ClusterLabels labels = dbscan(static_cloud, eps, min_pts);
    std::vector<Eigen::Vector2d> lo(static_cast<std::size_t>(labels.cluster_count),
                                    Eigen::Vector2d::Constant(1e18));
    std::vector<Eigen::Vector2d> hi(static_cast<std::size_t>(labels.cluster_count),
                                    Eigen::Vector2d::Constant(-1e18));
    for (std::size_t i = 0; i < static_cloud.size(); ++i) {
      const int id = labels.labels[i];
      if (id < 0) continue;
      const Point3& p = static_cloud.points[i];
      lo[id] = lo[id].cwiseMin(Eigen::Vector2d{p.x, p.y});
      hi[id] = hi[id].cwiseMax(Eigen::Vector2d{p.x, p.y});
    }
    for (int id = 0; id < labels.cluster_count; ++id) {
      ObstacleEllipse e;
      e.center = 0.5 * (lo[id] + hi[id]);
      const Eigen::Vector2d half = 0.5 * (hi[id] - lo[id]);
      e.semi_axes = (root2 * half).array() + margin;
      out.push_back(e);
    }
  }

  for (const ObstacleTrack& t : tracks) {
    if (t.member_cloud.empty()) continue;
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(1e18);
    Eigen::Vector2d hi = Eigen::Vector2d::Constant(-1e18);
    for (const Point3& p : t.member_cloud.points) {
      lo = lo.cwiseMin(Eigen::Vector2d{p.x, p.y});
      hi = hi.cwiseMax(Eigen::Vector2d{p.x, p.y});
    }
    ObstacleEllipse e;
    e.center = 0.5 * (lo + hi);
    e.semi_axes = (root2 * 0.5 * (hi - lo)).array() + margin;
    e.velocity = t.velocity.head<2>();
    out.push_back(e);
  }
  return out;
}

EllipsoidDcbfPlanner::EllipsoidDcbfPlanner(NmpcParams params, double cluster_eps,
                                           int cluster_min_pts)
    : params_(std::move(params)),
      cluster_eps_(cluster_eps),
      cluster_min_pts_(cluster_min_pts) {
  params_.validate();
}

void EllipsoidDcbfPlanner::reset() {
  fallback_ = FallbackBuffer{};
  prev_states_.clear();
  prev_inputs_.clear();
}

PlanStepResult EllipsoidDcbfPlanner::plan_step(
    const RobotState& x0, const RobotState& target,
    const PointCloud& static_cloud, const std::vector<ObstacleTrack>& tracks,
    double now) {
  const auto t_begin = std::chrono::steady_clock::now();
  const int N = params_.horizon;
  PlanStepResult result;

  const std::vector<ObstacleEllipse> ellipses = fit_obstacle_ellipses(
      static_cloud, cluster_eps_, cluster_min_pts_, tracks, params_.delta_s);
  result.static_risk_count = static_cast<int>(ellipses.size());

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

  NlpProblem problem =
      assemble_problem(x0, target, HistoricalRiskSet{}, {},
                       shifted_states.empty() ? nullptr : &shifted_states,
                       params_);
  // One decay inequality per ellipse per step; moving ellipses drift with
  // the tracked velocity.
  const double dt = params_.dt;
  for (const ObstacleEllipse& e : ellipses) {
    const Eigen::Vector2d inv{1.0 / (e.semi_axes.x() * e.semi_axes.x()),
                              1.0 / (e.semi_axes.y() * e.semi_axes.y())};
    for (int k = 0; k < N; ++k) {
      CbfConstraint c;
      c.k_prev = k;
      c.k_next = k + 1;
      c.center_prev = e.center + e.velocity * (k * dt);
      c.center_next = e.center + e.velocity * ((k + 1) * dt);
      c.inv_metric = inv;
      c.offset = 1.0;
      problem.cbf.push_back(c);
    }
  }

  NmpcSolution sol = solve(problem, have_warm ? &warm : nullptr);
  if (sol.status == SolveStatus::kFailed && have_warm &&
      params_.max_sqp_iterations > 0) {
    NmpcSolution cold = solve(problem, nullptr);
    cold.solve_time_s += sol.solve_time_s;
    cold.iterations += sol.iterations;
    sol = cold;
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
  } else {
    fallback_.steps_since_success += 1;
    result.applied = fallback_control(fallback_);
    result.fallback_exhausted =
        !fallback_.last_success.has_value() ||
        fallback_.steps_since_success >=
            static_cast<int>(fallback_.last_success->inputs.size());
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
