#include "ftdnav/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ftdnav {

ObstacleTrack kf_predict(const ObstacleTrack& track, double dt,
                         double sigma_accel) {
  if (!(dt > 0.0)) throw std::invalid_argument("kf_predict: dt must be > 0");
  ObstacleTrack out = track;
  out.position += track.velocity * dt;
  Eigen::Matrix2d F;
  F << 1.0, dt, 0.0, 1.0;
  const double q = sigma_accel * sigma_accel;
  Eigen::Matrix2d Q;
  Q << q * dt * dt * dt * dt / 4.0, q * dt * dt * dt / 2.0,
      q * dt * dt * dt / 2.0, q * dt * dt;
  for (int a = 0; a < 3; ++a) {
    out.covariance[a] = F * track.covariance[a] * F.transpose() + Q;
  }
  for (Point3& p : out.member_cloud.points) {
    p.x += track.velocity.x() * dt;
    p.y += track.velocity.y() * dt;
    p.z += track.velocity.z() * dt;
  }
  return out;
}

ObstacleTrack kf_update(const ObstacleTrack& track, const Point3& centroid,
                        double sigma_meas, double now) {
  if (!(sigma_meas > 0.0)) {
    throw std::invalid_argument("kf_update: sigma_meas must be > 0");
  }
  ObstacleTrack out = track;
  const Eigen::Vector3d z{centroid.x, centroid.y, centroid.z};
  const double r = sigma_meas * sigma_meas;

  if (track.measurement_count == 1) {
    // Two-point initialization: velocity from finite difference.
    const double dt = now - track.last_measurement_time;
    if (dt > 0.0) {
      out.velocity = (z - track.last_measurement) / dt;
      out.position = z;
      Eigen::Matrix2d P;
      P << r, r / dt, r / dt, 2.0 * r / (dt * dt);
      for (int a = 0; a < 3; ++a) out.covariance[a] = P;
    }
  } else {
    for (int a = 0; a < 3; ++a) {
      const Eigen::Matrix2d& P = track.covariance[a];
      const double s = P(0, 0) + r;
      const Eigen::Vector2d gain{P(0, 0) / s, P(1, 0) / s};
      const double innovation = z[a] - track.position[a];
      out.position[a] += gain[0] * innovation;
      out.velocity[a] += gain[1] * innovation;
      // Joseph form keeps the posterior symmetric PSD.
      Eigen::Matrix2d IKH = Eigen::Matrix2d::Identity();
      IKH(0, 0) -= gain[0];
      IKH(1, 0) -= gain[1];
      out.covariance[a] =
          IKH * P * IKH.transpose() + gain * r * gain.transpose();
    }
  }

  out.measurement_count = track.measurement_count + 1;
  out.last_measurement = z;
  out.last_measurement_time = now;
  out.last_update_time = now;
  return out;
}

std::vector<PointCloud> predict_obstacle_clouds(
    const std::vector<ObstacleTrack>& tracks, int horizon, double dt) {
  if (horizon < 1) throw std::invalid_argument("predict_obstacle_clouds: horizon must be >= 1");
  std::vector<PointCloud> clouds(horizon);
  for (int k = 0; k < horizon; ++k) {
    for (const ObstacleTrack& track : tracks) {
      const double shift = static_cast<double>(k) * dt;
      for (const Point3& p : track.member_cloud.points) {
        clouds[k].points.push_back(Point3{p.x + track.velocity.x() * shift,
                                          p.y + track.velocity.y() * shift,
                                          p.z + track.velocity.z() * shift});
      }
    }
  }
  return clouds;
}

void TrackManager::update(const PointCloud& frame_cloud,
                          const std::vector<DynamicDetection>& detections,
                          double now) {
  // Predict all live tracks to the frame time.
  for (ObstacleTrack& t : tracks_) {
    const double dt = now - t.last_update_time;
    if (dt > 0.0) {
      t = kf_predict(t, dt, params_.sigma_accel);
      t.last_update_time = now;
    }
  }

  struct Pair {
    double d;
    std::size_t det;
    std::size_t track;
  };
  std::vector<Pair> pairs;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    const Point3& c = detections[d].centroid;
    for (std::size_t t = 0; t < tracks_.size(); ++t) {
      const double dist = (Eigen::Vector3d{c.x, c.y, c.z} - tracks_[t].position).norm();
      if (dist <= params_.association_gate) pairs.push_back(Pair{dist, d, t});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.det != b.det) return a.det < b.det;
    return a.track < b.track;
  });

  std::vector<bool> det_matched(detections.size(), false);
  std::vector<bool> track_matched(tracks_.size(), false);
  auto push_window = [&](std::deque<bool>& q, bool v) {
    q.push_back(v);
    while (static_cast<int>(q.size()) > params_.miss_window) q.pop_front();
  };

  auto member_cloud_of = [&](const DynamicDetection& det) {
    PointCloud cloud;
    cloud.frame_time = now;
    cloud.points.reserve(det.indices.size());
    for (std::size_t idx : det.indices) cloud.points.push_back(frame_cloud.points[idx]);
    return cloud;
  };

  for (const Pair& pr : pairs) {
    if (det_matched[pr.det] || track_matched[pr.track]) continue;
    det_matched[pr.det] = true;
    track_matched[pr.track] = true;
    ObstacleTrack& t = tracks_[pr.track];
    t = kf_update(t, detections[pr.det].centroid, params_.sigma_meas, now);
    t.member_cloud = member_cloud_of(detections[pr.det]);
    push_window(t.miss_history, true);
  }

  for (std::size_t t = 0; t < tracks_.size(); ++t) {
    if (!track_matched[t]) push_window(tracks_[t].miss_history, false);
  }
  std::erase_if(tracks_, [&](const ObstacleTrack& t) {
    if (t.miss_history.empty()) return true;
    const int misses = static_cast<int>(
        std::count(t.miss_history.begin(), t.miss_history.end(), false));
    return static_cast<double>(misses) /
               static_cast<double>(t.miss_history.size()) >
           params_.t_ratio;
  });

  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (det_matched[d]) continue;
    ObstacleTrack t;
    t.id = next_id_++;
    const Point3& c = detections[d].centroid;
    t.position = Eigen::Vector3d{c.x, c.y, c.z};
    t.velocity = Eigen::Vector3d::Zero();
    Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
    P(0, 0) = params_.init_pos_var;
    P(1, 1) = params_.init_vel_var;
    for (int a = 0; a < 3; ++a) t.covariance[a] = P;
    t.member_cloud = member_cloud_of(detections[d]);
    t.last_update_time = now;
    t.measurement_count = 1;
    t.last_measurement = t.position;
    t.last_measurement_time = now;
    push_window(t.miss_history, true);
    tracks_.push_back(std::move(t));
  }
}

}  // namespace ftdnav
