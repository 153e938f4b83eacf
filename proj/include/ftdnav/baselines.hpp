#pragma once

#include <vector>

#include "ftdnav/ftd_map.hpp"
#include "ftdnav/nmpc.hpp"
#include "ftdnav/tracking.hpp"

namespace ftdnav {

/// Single-step reactive controller: a proportional go-to-goal law, minimally
/// modified so one decay condition holds against the single closest in-band
/// point of the current map (no prediction, no history). The modification is
/// a scalar QP in v with a closed-form solution; omega does not move the
/// position at this order and keeps its nominal value.
struct DepthCbfQpParams {
  double k_v{0.8};
  double k_omega{1.5};
};

struct DepthCbfQpResult {
  ControlInput input;
  bool feasible{true};
  bool constraint_active{false};
};

DepthCbfQpResult depth_cbf_qp_control(const RobotState& x, const FtdMap& map,
                                      double goal_x, double goal_y,
                                      const DepthCbfQpParams& gains,
                                      const NmpcParams& limits);

/// Planar bounding ellipse of one obstacle cluster, optionally drifting with
/// the tracked velocity.
struct ObstacleEllipse {
  Eigen::Vector2d center{0, 0};
  Eigen::Vector2d semi_axes{0.1, 0.1};
  Eigen::Vector2d velocity{0, 0};
};

/// Clusters the full-height static cloud (DBSCAN) and wraps every cluster and
/// every tracked obstacle in an axis-aligned ellipse: semi-axes are sqrt(2) x
/// the half-extents plus margin, which contains the whole cluster box.
std::vector<ObstacleEllipse> fit_obstacle_ellipses(
    const PointCloud& static_cloud, double eps, int min_pts,
    const std::vector<ObstacleTrack>& tracks, double margin);

/// Receding-horizon baseline that constrains against whole-obstacle ellipses
/// instead of selected risk points. Shares the solver, objective and
/// fallback rule with the main planner; only the constraint synthesis
/// differs.
class EllipsoidDcbfPlanner {
 public:
  EllipsoidDcbfPlanner(NmpcParams params, double cluster_eps, int cluster_min_pts);

  PlanStepResult plan_step(const RobotState& x0, const RobotState& target,
                           const PointCloud& static_cloud,
                           const std::vector<ObstacleTrack>& tracks, double now);

  const FallbackBuffer& fallback_buffer() const { return fallback_; }
  void reset();

 private:
  NmpcParams params_;
  double cluster_eps_;
  int cluster_min_pts_;
  FallbackBuffer fallback_;
  std::vector<RobotState> prev_states_;
  std::vector<ControlInput> prev_inputs_;
};

}  // namespace ftdnav
