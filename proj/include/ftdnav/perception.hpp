#pragma once

#include <deque>
#include <vector>

#include "ftdnav/geometry.hpp"
#include "ftdnav/world.hpp"

namespace ftdnav {

struct RobotState;  // nmpc.hpp

/// Synthetic depth sensor: a grid of rays over a FOV cone centered on the
/// robot heading.
struct SensorConfig {
  double horizontal_fov{1.9198621771937625};  // 110 deg
  double vertical_fov{1.3962634015954636};    // 80 deg
  double max_range{5.0};
  int rays_horizontal{96};
  int rays_vertical{20};
  double mount_height{0.3};

  void validate() const;
};

/// Casts one ray per grid cell and keeps first hits within max_range.
/// Points are in the world frame; output is deterministic in ray order.
PointCloud sense(const WorldModel& world, double x, double y, double heading,
                 const SensorConfig& cfg);

constexpr int kNoise = -1;

/// Per-point cluster ids (>= 0) or kNoise.
struct ClusterLabels {
  std::vector<int> labels;
  int cluster_count{0};
};

/// DBSCAN over 3-D points. Core point: >= min_pts neighbors within eps,
/// counting itself. Clusters are numbered in order of discovery under an
/// ascending-index scan, so the labeling is deterministic.
ClusterLabels dbscan(const PointCloud& cloud, double eps, int min_pts);

/// One cluster classified as dynamic in the current frame.
struct DynamicDetection {
  std::vector<std::size_t> indices;  // into the classified cloud
  Point3 centroid;
  Point3 bbox_min, bbox_max;
  double vx{0}, vy{0}, vz{0};  // frame-to-frame centroid velocity
  int track_id{-1};
};

struct PerceptionParams {
  double voxel_resolution{0.1};
  double dbscan_eps{0.2};  // 2 x voxel resolution
  int dbscan_min_pts{4};
  double v_dyn{0.1};          // dynamic velocity threshold, m/s
  double vote_fraction{0.8};  // fraction of dynamic votes required
  int vote_window{5};         // frames
  double association_gate{0.8};  // m, centroid distance
  double t_ratio{0.5};           // max skip (miss) ratio before track drop
  int miss_window{10};           // frames over which t_ratio is evaluated
  double local_range{2.5};       // half extent of the 5x5 m crop window

  void validate() const;
};

struct ClassifyResult {
  PointCloud static_cloud;
  std::vector<DynamicDetection> detections;
};

/// Splits each frame's clusters into static points and dynamic detections.
///
/// Each cluster is associated to the nearest surviving cluster track by
/// centroid distance (gated). Every associated frame casts a vote: dynamic
/// iff the frame-to-frame centroid speed exceeds v_dyn. A cluster is
/// classified dynamic iff its current vote is dynamic and at least
/// vote_fraction of the last vote_window slots are dynamic votes (unfilled
/// slots count as static). Clusters without history default to static.
class ClusterClassifier {
 public:
  explicit ClusterClassifier(PerceptionParams params);

  ClassifyResult classify(const PointCloud& cloud, const ClusterLabels& labels,
                          double now);

  void reset();

 private:
  struct ClusterTrack {
    int id;
    Point3 centroid;
    double last_time;
    std::deque<bool> votes;   // dynamic votes, newest last
    std::deque<bool> hits;    // association history, newest last
    bool matched_this_frame{false};
  };

  PerceptionParams params_;
  std::vector<ClusterTrack> tracks_;
  int next_id_{0};
};

}  // namespace ftdnav
