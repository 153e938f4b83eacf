#include "ftdnav/simulator.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <random>

#include "ftdnav/baselines.hpp"

namespace ftdnav {

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kSuccess: return "success";
    case Outcome::kCollision: return "collision";
    case Outcome::kTimeout: return "timeout";
  }
  return "unknown";
}

Metrics compute_metrics(const SimTrace& trace) {
  Metrics m;
  if (trace.rows.empty()) return m;
  m.mu_d = std::numeric_limits<double>::infinity();
  for (const TraceRow& row : trace.rows) {
    m.mu_d = std::min(m.mu_d, row.min_obstacle_dist);
  }
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const TraceRow& a = trace.rows[i - 1];
    const TraceRow& b = trace.rows[i];
    m.path_length += std::hypot(b.x - a.x, b.y - a.y);
    const double dth = wrap_angle(b.theta - a.theta);
    m.smoothness += dth * dth;
  }
  m.success = trace.outcome == Outcome::kSuccess;
  m.collision = trace.outcome == Outcome::kCollision;
  if (m.success) m.mu_t = trace.end_time;
  return m;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  RunResult result;
  WorldModel world = cfg.make_world();

  SimTrace& trace = result.trace;
  trace.scenario_name = cfg.name;
  trace.planner = planner_name(cfg.planner);
  trace.seed = cfg.seed;
  trace.goal_x = cfg.goal_x;
  trace.goal_y = cfg.goal_y;
  trace.goal_tolerance = cfg.goal_tolerance;
  trace.robot_radius = cfg.robot_radius;
  trace.robot_height = cfg.robot_height;

  RobotState robot = cfg.start;
  RobotState target{cfg.goal_x, cfg.goal_y,
                    std::atan2(cfg.goal_y - cfg.start.y, cfg.goal_x - cfg.start.x)};

  // Perception state.
  ClusterClassifier classifier(cfg.perception);
  TrackingParams tracking = cfg.tracking;
  tracking.association_gate = cfg.perception.association_gate;
  tracking.t_ratio = cfg.perception.t_ratio;
  TrackManager tracker(tracking);
  std::mt19937 noise_rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  FtdMap map;
  PointCloud last_static_cloud;
  bool map_ready = false;

  // Planner state (one variant active per run).
  Planner ours(cfg.nmpc, cfg.risk);
  EllipsoidDcbfPlanner ellipsoid(cfg.nmpc, cfg.perception.dbscan_eps,
                                 cfg.perception.dbscan_min_pts);
  DepthCbfQpParams depth_gains;

  ControlInput input{};
  int status = kStatusNone;
  int static_risks = 0;
  int dynamic_risks = 0;

  double solve_time_sum = 0.0;
  double solve_time_max = 0.0;

  const int max_ticks =
      static_cast<int>(std::ceil(cfg.timeout_s / cfg.physics_dt));
  Outcome outcome = Outcome::kTimeout;
  double end_time = 0.0;

  for (int tick = 0;; ++tick) {
    const double t = tick * cfg.physics_dt;
    const double clearance = true_clearance(world, robot.x, robot.y, cfg.robot_height);

    const double goal_dist = std::hypot(robot.x - cfg.goal_x, robot.y - cfg.goal_y);
    const bool terminal_success = goal_dist <= cfg.goal_tolerance;
    const bool terminal_collision = clearance < cfg.robot_radius;
    const bool terminal_timeout = tick >= max_ticks;
    if (terminal_success || terminal_collision || terminal_timeout) {
      outcome = terminal_success   ? Outcome::kSuccess
                : terminal_collision ? Outcome::kCollision
                                     : Outcome::kTimeout;
      end_time = t;
      trace.rows.push_back(TraceRow{t, robot.x, robot.y, robot.theta, input.v,
                                    input.omega, status, clearance,
                                    static_risks, dynamic_risks});
      break;
    }

    if (tick % cfg.perception_every == 0) {
      PointCloud raw = sense(world, robot.x, robot.y, robot.theta, cfg.sensor);
      raw.frame_time = t;
      if (cfg.sensor_noise_sigma > 0.0) {
        for (Point3& p : raw.points) {
          p.x += cfg.sensor_noise_sigma * gauss(noise_rng);
          p.y += cfg.sensor_noise_sigma * gauss(noise_rng);
          p.z += cfg.sensor_noise_sigma * gauss(noise_rng);
        }
      }
      // Classification runs on the full sensed cloud; the local crop is a
      // map-build step, otherwise the moving window fakes cluster motion.
      PointCloud voxeled = voxel_downsample(raw, cfg.perception.voxel_resolution);
      const ClusterLabels labels = dbscan(voxeled, cfg.perception.dbscan_eps,
                                          cfg.perception.dbscan_min_pts);
      ClassifyResult classified = classifier.classify(voxeled, labels, t);
      tracker.update(voxeled, classified.detections, t);
      std::vector<PointCloud> dyn_clouds = predict_obstacle_clouds(
          tracker.tracks(), cfg.nmpc.horizon, cfg.nmpc.dt);
      last_static_cloud = crop_planar(classified.static_cloud, robot.x, robot.y,
                                      cfg.perception.local_range);
      for (PointCloud& cloud : dyn_clouds) {
        cloud = crop_planar(cloud, robot.x, robot.y, cfg.perception.local_range);
      }
      map = build_ftd(last_static_cloud, std::move(dyn_clouds));
      map_ready = true;
    }

    if (tick % cfg.planning_every == 0 && map_ready) {
      result.planning_cycles += 1;
      switch (cfg.planner) {
        case PlannerKind::kOurs: {
          const PlanStepResult r = ours.plan_step(robot, target, map, t);
          if (std::getenv("FTDNAV_SIM_TRACE")) {
            std::fprintf(stderr,
                         "[plan t=%.2f] solved=%d iters=%d sqp_ms=%.1f hist=%d dyn=%d "
                         "pos=(%.2f,%.2f th=%.2f) u=(%.2f,%.2f)\n",
                         t, r.solved ? 1 : 0, r.solution.iterations,
                         r.solution.solve_time_s * 1e3, r.static_risk_count,
                         r.dynamic_risk_count, robot.x, robot.y, robot.theta,
                         r.applied.v, r.applied.omega);
          }
          input = r.applied;
          status = r.solved ? kStatusSolved
                            : (r.fallback_exhausted ? kStatusStopped
                                                    : kStatusFallback);
          static_risks = r.static_risk_count;
          dynamic_risks = r.dynamic_risk_count;
          solve_time_sum += r.cycle_time_s;
          solve_time_max = std::max(solve_time_max, r.cycle_time_s);
          if (!r.solved) result.solver_failures += 1;
          result.min_static_cbf_margin =
              std::min(result.min_static_cbf_margin, r.min_static_cbf_margin);
          break;
        }
        case PlannerKind::kEllipsoidDcbf: {
          const PlanStepResult r = ellipsoid.plan_step(
              robot, target, last_static_cloud, tracker.tracks(), t);
          input = r.applied;
          status = r.solved ? kStatusSolved
                            : (r.fallback_exhausted ? kStatusStopped
                                                    : kStatusFallback);
          static_risks = r.static_risk_count;
          dynamic_risks = 0;
          solve_time_sum += r.cycle_time_s;
          solve_time_max = std::max(solve_time_max, r.cycle_time_s);
          if (!r.solved) result.solver_failures += 1;
          break;
        }
        case PlannerKind::kDepthCbfQp: {
          const auto t0 = std::chrono::steady_clock::now();
          const DepthCbfQpResult r = depth_cbf_qp_control(
              robot, map, cfg.goal_x, cfg.goal_y, depth_gains, cfg.nmpc);
          input = r.input;
          status = r.feasible ? kStatusSolved : kStatusStopped;
          static_risks = r.constraint_active ? 1 : 0;
          dynamic_risks = 0;
          const double dt_solve = std::chrono::duration<double>(
                                      std::chrono::steady_clock::now() - t0)
                                      .count();
          solve_time_sum += dt_solve;
          solve_time_max = std::max(solve_time_max, dt_solve);
          if (!r.feasible) result.solver_failures += 1;
          break;
        }
      }
    }

    trace.rows.push_back(TraceRow{t, robot.x, robot.y, robot.theta, input.v,
                                  input.omega, status, clearance, static_risks,
                                  dynamic_risks});

    robot = dynamics_step(robot, input, cfg.physics_dt);
    step_world(world, cfg.physics_dt);
  }

  trace.outcome = outcome;
  trace.end_time = end_time;

  result.metrics = compute_metrics(trace);
  if (result.planning_cycles > 0) {
    result.metrics.solve_time_mean = solve_time_sum / result.planning_cycles;
    result.metrics.solve_time_max = solve_time_max;
  }
  return result;
}

}  // namespace ftdnav
