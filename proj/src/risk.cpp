#include "ftdnav/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ftdnav {

void HistoricalRiskSet::update(const std::vector<RiskPoint>& new_points,
                               double robot_x, double robot_y, double now) {
  for (const RiskPoint& rp : new_points) {
    const bool duplicate =
        std::any_of(points_.begin(), points_.end(), [&](const RiskPoint& q) {
          return dist_sq(q.position, rp.position) <
                 params_.merge_radius * params_.merge_radius;
        });
    if (!duplicate) {
      RiskPoint copy = rp;
      copy.kind = RiskKind::kStatic;
      copy.step = -1;
      copy.born_time = now;
      points_.push_back(copy);
    }
  }
  std::erase_if(points_, [&](const RiskPoint& q) {
    const double range_sq = params_.history_range * params_.history_range;
    if (planar_dist_sq(q.position, robot_x, robot_y) > range_sq) return true;
    return now - q.born_time > params_.history_max_age;
  });
  while (points_.size() > params_.history_capacity) {
    points_.erase(points_.begin());  // oldest first
  }
}

std::vector<RiskPoint> identify_static_risk(const FtdMap& map,
                                            const PredictedTrajectory& prev,
                                            double delta_s,
                                            const HeightBand& band,
                                            double now) {
  if (!(delta_s > 0.0)) throw std::invalid_argument("identify_static_risk: delta_s must be > 0");
  const int horizon = map.horizon();
  const int steps = std::min<int>(horizon, static_cast<int>(prev.states.size()));
  std::vector<RiskPoint> out;

  int forward_step = -1;
  for (int k = 0; k < steps; ++k) {
    const RobotState& s = prev.states[static_cast<std::size_t>(k)];
    if (const auto hit = map.static_collision(s.x, s.y, band, delta_s)) {
      out.push_back(RiskPoint{hit->point, RiskKind::kStatic, -1, now});
      forward_step = k;
      break;
    }
  }
  for (int k = steps - 1; k >= 0; --k) {
    if (k == forward_step) break;  // same step: report one point
    const RobotState& s = prev.states[static_cast<std::size_t>(k)];
    if (const auto hit = map.static_collision(s.x, s.y, band, delta_s)) {
      out.push_back(RiskPoint{hit->point, RiskKind::kStatic, -1, now});
      break;
    }
  }
  return out;
}

std::vector<RiskPoint> identify_dynamic_risks(const FtdMap& map,
                                              const PredictedTrajectory& prev,
                                              double delta_d,
                                              const HeightBand& band) {
  if (!(delta_d > 0.0)) throw std::invalid_argument("identify_dynamic_risks: delta_d must be > 0");
  const int horizon = map.horizon();
  const int steps = std::min<int>(horizon, static_cast<int>(prev.states.size()));
  std::vector<RiskPoint> out;
  for (int k = 0; k < steps; ++k) {
    const RobotState& s = prev.states[static_cast<std::size_t>(k)];
    const auto hit = map.nearest_dynamic_at_step(k, s.x, s.y, band);
    if (hit && hit->dist_sq < delta_d * delta_d) {
      out.push_back(RiskPoint{hit->point, RiskKind::kDynamic, k, 0.0});
    }
  }
  return out;
}

}  // namespace ftdnav
