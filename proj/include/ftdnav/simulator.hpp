#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ftdnav/scenario.hpp"

namespace ftdnav {

enum class Outcome { kSuccess, kCollision, kTimeout };

std::string outcome_name(Outcome o);

/// Solver status codes recorded per tick (held between planner invocations).
enum SolverStatusCode : int {
  kStatusNone = 0,      // no planner invocation yet
  kStatusSolved = 1,
  kStatusFallback = 2,  // solver failed, stored sequence applied
  kStatusStopped = 3,   // fallback exhausted (or reactive QP infeasible)
};

struct TraceRow {
  double time{0.0};
  double x{0.0}, y{0.0}, theta{0.0};
  double v_cmd{0.0}, omega_cmd{0.0};
  int solver_status{kStatusNone};
  double min_obstacle_dist{0.0};
  int static_risk_count{0};
  int dynamic_risk_count{0};
};

struct SimTrace {
  std::vector<TraceRow> rows;
  // Terminal metadata needed to recompute metrics from the trace alone.
  std::string scenario_name;
  std::string planner;
  unsigned seed{0};
  double goal_x{0.0}, goal_y{0.0};
  double goal_tolerance{0.2};
  double robot_radius{0.25};
  double robot_height{0.4};
  Outcome outcome{Outcome::kTimeout};
  double end_time{0.0};
};

struct Metrics {
  double mu_d{0.0};        // min distance to obstacles along the path
  double path_length{0.0};
  double smoothness{0.0};  // sum of squared wrapped heading increments
  std::optional<double> mu_t;  // completion time; absent unless success
  bool success{false};
  bool collision{false};
  double solve_time_mean{0.0};  // full planning cycle, seconds
  double solve_time_max{0.0};
};

/// Pure function of the recorded trace (timing aggregates are not derivable
/// from a trace and stay zero here).
Metrics compute_metrics(const SimTrace& trace);

struct RunResult {
  SimTrace trace;
  Metrics metrics;
  // Planner diagnostics aggregated over the run.
  int planning_cycles{0};
  int solver_failures{0};
  double min_static_cbf_margin{std::numeric_limits<double>::infinity()};
};

/// Deterministic lockstep simulation of one scenario: physics at
/// cfg.physics_dt, perception every cfg.perception_every ticks, planning
/// every cfg.planning_every ticks, zero-order-hold inputs.
RunResult run_scenario(const ScenarioConfig& cfg);

}  // namespace ftdnav
