#pragma once

#include <Eigen/Dense>
#include <deque>
#include <vector>

#include "ftdnav/geometry.hpp"
#include "ftdnav/perception.hpp"

namespace ftdnav {

struct TrackingParams {
  double sigma_accel{2.0};  // white-acceleration process noise, m/s^2
  double sigma_meas{0.05};  // centroid measurement noise, m
  double init_pos_var{1.0};
  double init_vel_var{4.0};
  double association_gate{0.8};
  double t_ratio{0.5};
  int miss_window{10};
};

/// Constant-velocity Kalman track of one dynamic obstacle. The filter is
/// three decoupled per-axis (position, velocity) filters; member_cloud rides
/// along rigidly with the velocity estimate.
struct ObstacleTrack {
  int id{-1};
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d velocity{Eigen::Vector3d::Zero()};
  // Per-axis 2x2 covariance blocks: [pos, vel] x [pos, vel].
  std::array<Eigen::Matrix2d, 3> covariance{};
  PointCloud member_cloud;
  double last_update_time{0.0};
  std::deque<bool> miss_history;  // true = hit
  int measurement_count{0};
  Eigen::Vector3d last_measurement{Eigen::Vector3d::Zero()};
  double last_measurement_time{0.0};
};

/// Time update: position += velocity * dt, covariance -> F P F^T + Q with a
/// white-acceleration Q. The member cloud translates rigidly.
ObstacleTrack kf_predict(const ObstacleTrack& track, double dt,
                         double sigma_accel);

/// Measurement update on the centroid position. The second measurement of a
/// young track initializes velocity by finite difference instead of running
/// the regular update (two-point initialization).
ObstacleTrack kf_update(const ObstacleTrack& track, const Point3& centroid,
                        double sigma_meas, double now);

/// P_dyn_k for k = 0..N-1: member clouds rigidly translated by velocity*k*dt.
std::vector<PointCloud> predict_obstacle_clouds(
    const std::vector<ObstacleTrack>& tracks, int horizon, double dt);

/// Owns the obstacle track list; associates detections, runs the filters and
/// prunes dead tracks.
class TrackManager {
 public:
  explicit TrackManager(TrackingParams params) : params_(params) {}

  void update(const PointCloud& frame_cloud,
              const std::vector<DynamicDetection>& detections, double now);

  const std::vector<ObstacleTrack>& tracks() const { return tracks_; }
  void reset() { tracks_.clear(); next_id_ = 0; }

 private:
  TrackingParams params_;
  std::vector<ObstacleTrack> tracks_;
  int next_id_{0};
};

}  // namespace ftdnav
