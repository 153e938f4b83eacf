#pragma once

#include <vector>

#include "ftdnav/ftd_map.hpp"
#include "ftdnav/robot.hpp"

namespace ftdnav {

/// The trajectory predicted by the previous planning cycle; states[k] is the
/// pose the earlier solve expected k steps after its own solve time.
struct PredictedTrajectory {
  std::vector<RobotState> states;  // horizon + 1 entries
  double solve_time{0.0};
};

enum class RiskKind { kStatic, kDynamic };

/// One point of the FTD map promoted to a hard barrier constraint.
struct RiskPoint {
  Point3 position;
  RiskKind kind{RiskKind::kStatic};
  int step{-1};          // horizon index, dynamic points only
  double born_time{0.0};  // static points only
};

struct RiskParams {
  std::size_t history_capacity{20};
  double merge_radius{0.05};
  double history_range{5.0};    // drop members farther than this from the robot
  double history_max_age{10.0};  // seconds
};

/// Retained static risk points from earlier cycles. Members stay pairwise at
/// least merge_radius apart; pruning enforces range, age and capacity.
class HistoricalRiskSet {
 public:
  HistoricalRiskSet() = default;
  explicit HistoricalRiskSet(RiskParams params) : params_(params) {}

  /// Inserts the new points (skipping near-duplicates), then drops members
  /// that are out of range of the robot, too old, or beyond capacity
  /// (oldest first).
  void update(const std::vector<RiskPoint>& new_points, double robot_x,
              double robot_y, double now);

  const std::vector<RiskPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  void clear() { points_.clear(); }

 private:
  RiskParams params_;
  std::vector<RiskPoint> points_;  // insertion-ordered, oldest first
};

/// Forward/inverse scan of the previous prediction against the static tree.
/// The forward pass reports the colliding point at the first colliding step
/// scanning k = 0..N-1 upward; the inverse pass reports the one at the first
/// colliding step scanning downward. Returns 0, 1 (same step) or 2 points.
std::vector<RiskPoint> identify_static_risk(const FtdMap& map,
                                            const PredictedTrajectory& prev,
                                            double delta_s,
                                            const HeightBand& band,
                                            double now);

/// Per-step scan of the previous prediction against the dynamic trees: for
/// each step k whose predicted pose is strictly within delta_d of the step-k
/// dynamic cloud, the nearest such point becomes the step's risk point.
std::vector<RiskPoint> identify_dynamic_risks(const FtdMap& map,
                                              const PredictedTrajectory& prev,
                                              double delta_d,
                                              const HeightBand& band);

}  // namespace ftdnav
