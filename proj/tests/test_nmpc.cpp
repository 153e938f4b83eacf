#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ftdnav/nmpc.hpp"

using namespace ftdnav;

namespace {

NmpcParams test_params() {
  NmpcParams p;
  p.horizon = 30;
  p.dt = 0.1;
  p.gamma = 0.9;
  p.v_min = -0.3;
  p.v_max = 1.2;
  p.omega_max = 1.2;
  return p;
}

double solution_objective(const NlpProblem& prob, const std::vector<RobotState>& xs,
                          const std::vector<ControlInput>& us) {
  // Same cost the solver optimizes, evaluated independently.
  const auto& p = prob.params;
  double cost = 0.0;
  for (int k = 0; k <= p.horizon; ++k) {
    const bool terminal = k == p.horizon;
    const Eigen::Vector3d w =
        terminal ? (p.terminal_weight_scale * p.q_weights).eval() : p.q_weights;
    const double ex = prob.target.x - xs[k].x;
    const double ey = prob.target.y - xs[k].y;
    const double et = wrap_angle(prob.target.theta - xs[k].theta);
    cost += w.x() * ex * ex + w.y() * ey * ey + w.z() * et * et;
    if (!terminal) {
      const RobotState& ref = prob.variation_reference[k];
      const double vx = xs[k].x - ref.x;
      const double vy = xs[k].y - ref.y;
      const double vt = wrap_angle(xs[k].theta - ref.theta);
      cost += p.w_weights.x() * vx * vx + p.w_weights.y() * vy * vy +
              p.w_weights.z() * vt * vt;
      cost += p.r_weights.x() * us[k].v * us[k].v +
              p.r_weights.y() * us[k].omega * us[k].omega;
    }
  }
  return cost;
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3.0 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(0.1) == doctest::Approx(0.1));
  CHECK(wrap_angle(-0.1) == doctest::Approx(-0.1));
}

TEST_CASE("dynamics_step: unicycle kinematics") {
  const RobotState a = dynamics_step({1.0, 2.0, 0.0}, {1.0, 0.0}, 0.1);
  CHECK(a.x == doctest::Approx(1.1));
  CHECK(a.y == doctest::Approx(2.0));
  CHECK(a.theta == doctest::Approx(0.0));

  const RobotState b = dynamics_step({1.0, 2.0, 0.0}, {0.0, 1.0}, 0.1);
  CHECK(b.x == doctest::Approx(1.0));
  CHECK(b.y == doctest::Approx(2.0));
  CHECK(b.theta == doctest::Approx(0.1));

  const RobotState c =
      dynamics_step({0.0, 0.0, std::numbers::pi / 2.0}, {1.0, 0.0}, 0.1);
  CHECK(c.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.y == doctest::Approx(0.1));
  CHECK(c.theta == doctest::Approx(std::numbers::pi / 2.0));
}

TEST_CASE("barrier_value: squared planar clearance minus buffer") {
  CHECK(barrier_value(1.0, 0.0, Point3{0, 0, 0.7}, 0.5) == doctest::Approx(0.75));
  CHECK(barrier_value(0.5, 0.0, Point3{0, 0, 0}, 0.5) == doctest::Approx(0.0));
  CHECK(barrier_value(0.0, 0.0, Point3{0, 0, 1.0}, 0.5) == doctest::Approx(-0.25));
}

TEST_CASE("gradient check: dynamics jacobians vs central differences") {
  std::mt19937 rng(123);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  const double h = 1e-6;
  const double dt = 0.1;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const RobotState x{unif(rng), unif(rng), unif(rng)};
    const ControlInput u{0.5 * unif(rng), 0.5 * unif(rng)};
    Eigen::Matrix3d A;
    Eigen::Matrix<double, 3, 2> B;
    dynamics_jacobians(x, u, dt, A, B);

    auto f = [&](const RobotState& xs, const ControlInput& us) {
      // Unwrapped variant keeps the finite difference smooth.
      return Eigen::Vector3d{xs.x + std::cos(xs.theta) * us.v * dt,
                             xs.y + std::sin(xs.theta) * us.v * dt,
                             xs.theta + us.omega * dt};
    };
    for (int j = 0; j < 3; ++j) {
      RobotState xp = x, xm = x;
      (j == 0 ? xp.x : j == 1 ? xp.y : xp.theta) += h;
      (j == 0 ? xm.x : j == 1 ? xm.y : xm.theta) -= h;
      const Eigen::Vector3d fd = (f(xp, u) - f(xm, u)) / (2.0 * h);
      for (int i = 0; i < 3; ++i) {
        const double denom = std::max(1.0, std::abs(fd(i)));
        worst = std::max(worst, std::abs(fd(i) - A(i, j)) / denom);
      }
    }
    for (int j = 0; j < 2; ++j) {
      ControlInput up = u, um = u;
      (j == 0 ? up.v : up.omega) += h;
      (j == 0 ? um.v : um.omega) -= h;
      const Eigen::Vector3d fd = (f(x, up) - f(x, um)) / (2.0 * h);
      for (int i = 0; i < 3; ++i) {
        const double denom = std::max(1.0, std::abs(fd(i)));
        worst = std::max(worst, std::abs(fd(i) - B(i, j)) / denom);
      }
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("gradient check: barrier rows vs central differences") {
  std::mt19937 rng(321);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    CbfConstraint c;
    c.center_prev = {unif(rng), unif(rng)};
    c.center_next = {unif(rng), unif(rng)};
    c.inv_metric = {0.5 + std::abs(unif(rng)), 0.5 + std::abs(unif(rng))};
    c.offset = 0.1 + std::abs(unif(rng));
    const double gamma = 0.9;
    const Eigen::Vector2d pp{unif(rng), unif(rng)};
    const Eigen::Vector2d pn{unif(rng), unif(rng)};
    Eigen::Vector2d gp, gn;
    cbf_row(c, gamma, pp, pn, &gp, &gn);
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e(j) = h;
      const double fd_p =
          (cbf_row(c, gamma, pp + e, pn) - cbf_row(c, gamma, pp - e, pn)) /
          (2.0 * h);
      const double fd_n =
          (cbf_row(c, gamma, pp, pn + e) - cbf_row(c, gamma, pp, pn - e)) /
          (2.0 * h);
      worst = std::max(worst, std::abs(fd_p - gp(j)) / std::max(1.0, std::abs(fd_p)));
      worst = std::max(worst, std::abs(fd_n - gn(j)) / std::max(1.0, std::abs(fd_n)));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("assemble_problem: constraint counting") {
  const NmpcParams p = test_params();
  HistoricalRiskSet hist{RiskParams{}};
  std::vector<RiskPoint> dyn;

  SUBCASE("no risk points") {
    const auto prob = assemble_problem({0, 0, 0}, {1, 0, 0}, hist, dyn, nullptr, p);
    CHECK(prob.cbf.empty());
    // Cold start: variation reference collapses to x0.
    for (const RobotState& r : prob.variation_reference) {
      CHECK(r.x == 0.0);
      CHECK(r.y == 0.0);
    }
  }

  SUBCASE("two static points and five dynamic risks") {
    hist.update({RiskPoint{{1, 0, 0.1}, RiskKind::kStatic, -1, 0.0},
                 RiskPoint{{2, 1, 0.1}, RiskKind::kStatic, -1, 0.0}},
                0.0, 0.0, 0.0);
    for (int k = 10; k < 15; ++k) {
      dyn.push_back(RiskPoint{{1.0, 1.0, 0.1}, RiskKind::kDynamic, k, 0.0});
    }
    const auto prob = assemble_problem({0, 0, 0}, {1, 0, 0}, hist, dyn, nullptr, p);
    CHECK(prob.cbf.size() == 2 * 30 + 5);
  }

  SUBCASE("non-finite input rejected") {
    CHECK_THROWS(assemble_problem({std::nan(""), 0, 0}, {1, 0, 0}, hist, dyn,
                                  nullptr, p));
  }
}

TEST_CASE("solve: target equals start gives near-zero inputs and cost") {
  const NmpcParams p = test_params();
  HistoricalRiskSet hist{RiskParams{}};
  const auto prob =
      assemble_problem({1.0, -2.0, 0.3}, {1.0, -2.0, 0.3}, hist, {}, nullptr, p);
  const auto sol = solve(prob);
  REQUIRE(sol.status == SolveStatus::kSolved);
  for (const ControlInput& u : sol.inputs) {
    CHECK(std::abs(u.v) <= 1e-4);
    CHECK(std::abs(u.omega) <= 1e-4);
  }
  CHECK(sol.cost <= 1e-6);
}

TEST_CASE("solve: obstacle-free goal 2 m ahead beats constant-input search") {
  const NmpcParams p = test_params();
  HistoricalRiskSet hist{RiskParams{}};
  const auto prob = assemble_problem({0, 0, 0}, {2, 0, 0}, hist, {}, nullptr, p);
  const auto sol = solve(prob);
  REQUIRE(sol.status == SolveStatus::kSolved);

  CHECK(sol.inputs[0].v >= 1.0);
  CHECK(sol.inputs[0].v <= 1.2 + 1e-9);
  CHECK(std::abs(sol.inputs[0].omega) <= 1e-3);

  // Dense grid over constant-input rollouts provides an independent upper
  // bound reference: the optimizer must do at least as well.
  double best_grid = std::numeric_limits<double>::infinity();
  for (int iv = -3; iv <= 12; ++iv) {
    for (int io = -12; io <= 12; ++io) {
      const ControlInput u{iv * 0.1, io * 0.1};
      std::vector<RobotState> xs{static_cast<std::size_t>(p.horizon + 1)};
      std::vector<ControlInput> us(static_cast<std::size_t>(p.horizon), u);
      xs[0] = {0, 0, 0};
      for (int k = 0; k < p.horizon; ++k) xs[k + 1] = dynamics_step(xs[k], u, p.dt);
      best_grid = std::min(best_grid, solution_objective(prob, xs, us));
    }
  }
  CHECK(sol.cost <= best_grid + 1e-6);

  // Dynamics consistency of the published trajectory.
  for (int k = 0; k < p.horizon; ++k) {
    const RobotState next = dynamics_step(sol.states[k], sol.inputs[k], p.dt);
    CHECK(std::abs(next.x - sol.states[k + 1].x) <= 1e-8);
    CHECK(std::abs(next.y - sol.states[k + 1].y) <= 1e-8);
    CHECK(std::abs(wrap_angle(next.theta - sol.states[k + 1].theta)) <= 1e-8);
  }
}

TEST_CASE("solve: hard barrier enforces the decay chain") {
  NmpcParams p = test_params();
  HistoricalRiskSet hist{RiskParams{}};
  hist.update({RiskPoint{{1.5, 0.0, 0.2}, RiskKind::kStatic, -1, 0.0}}, 0, 0, 0.0);
  const auto prob = assemble_problem({0, 0, 0}, {3, 0, 0}, hist, {}, nullptr, p);
  const auto sol = solve(prob);
  REQUIRE(sol.status == SolveStatus::kSolved);

  const Point3 risk{1.5, 0.0, 0.2};
  const double h0 = barrier_value(sol.states[0].x, sol.states[0].y, risk, p.delta_s);
  double bound = h0;
  for (int k = 0; k < p.horizon; ++k) {
    const double hk = barrier_value(sol.states[k].x, sol.states[k].y, risk, p.delta_s);
    const double hk1 =
        barrier_value(sol.states[k + 1].x, sol.states[k + 1].y, risk, p.delta_s);
    CHECK(hk1 - (1.0 - p.gamma) * hk >= -1e-6);  // per-step condition
    bound *= (1.0 - p.gamma);
    CHECK(hk1 >= bound - 1e-6);  // telescoped lower bound
  }
  // The trajectory must clear the buffer at every step.
  for (const RobotState& s : sol.states) {
    CHECK(barrier_value(s.x, s.y, risk, p.delta_s) >= -1e-6);
  }
}

TEST_CASE("solve: warm start from own shifted solution converges fast") {
  const NmpcParams p = test_params();
  HistoricalRiskSet hist{RiskParams{}};
  const auto prob = assemble_problem({0, 0, 0}, {2, 0, 0}, hist, {}, nullptr, p);
  const auto first = solve(prob);
  REQUIRE(first.status == SolveStatus::kSolved);

  // Advance one step along the plan and re-solve from the shifted solution.
  const RobotState x1 = first.states[1];
  NmpcSolution warm;
  warm.states.assign(first.states.begin() + 1, first.states.end());
  warm.states.push_back(first.states.back());
  warm.inputs.assign(first.inputs.begin() + 1, first.inputs.end());
  warm.inputs.push_back(first.inputs.back());

  std::vector<RobotState> ref = warm.states;
  const auto prob2 = assemble_problem(x1, {2, 0, 0}, hist, {}, &ref, p);
  const auto second = solve(prob2, &warm);
  REQUIRE(second.status == SolveStatus::kSolved);
  CHECK(second.iterations <= 3);
}

TEST_CASE("fallback_control: indexing and exhaustion") {
  FallbackBuffer buf;
  CHECK(fallback_control(buf).v == 0.0);  // nothing stored yet

  NmpcSolution sol;
  sol.status = SolveStatus::kSolved;
  for (int k = 0; k < 30; ++k) {
    sol.inputs.push_back(ControlInput{0.01 * k, -0.01 * k});
  }
  buf.last_success = sol;

  buf.steps_since_success = 0;
  CHECK(fallback_control(buf).v == doctest::Approx(0.0));
  buf.steps_since_success = 2;
  CHECK(fallback_control(buf).v == doctest::Approx(0.02));
  CHECK(fallback_control(buf).omega == doctest::Approx(-0.02));
  buf.steps_since_success = 30;  // == horizon: exhausted, stop
  CHECK(fallback_control(buf).v == 0.0);
  CHECK(fallback_control(buf).omega == 0.0);
}

TEST_CASE("solver failure surfaces as a status") {
  NmpcParams p = test_params();
  p.max_sqp_iterations = 0;  // forced failure switch used by the test rig
  HistoricalRiskSet hist{RiskParams{}};
  const auto prob = assemble_problem({0, 0, 0}, {2, 0, 0}, hist, {}, nullptr, p);
  const auto sol = solve(prob);
  CHECK(sol.status == SolveStatus::kFailed);
}
