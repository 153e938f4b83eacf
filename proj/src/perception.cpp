#include "ftdnav/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ftdnav/kdtree.hpp"

namespace ftdnav {

void SensorConfig::validate() const {
  if (!(horizontal_fov > 0.0) || horizontal_fov >= 2.0 * std::numbers::pi ||
      !(vertical_fov > 0.0) || vertical_fov >= 2.0 * std::numbers::pi) {
    throw std::invalid_argument("sensor: fov must be in (0, 2*pi)");
  }
  if (!(max_range > 0.0)) throw std::invalid_argument("sensor: max_range must be > 0");
  if (rays_horizontal < 1 || rays_vertical < 1) {
    throw std::invalid_argument("sensor: ray counts must be >= 1");
  }
}

void PerceptionParams::validate() const {
  if (!(voxel_resolution > 0.0)) throw std::invalid_argument("perception: voxel_resolution must be > 0");
  if (!(dbscan_eps > 0.0)) throw std::invalid_argument("perception: dbscan_eps must be > 0");
  if (dbscan_min_pts < 1) throw std::invalid_argument("perception: dbscan_min_pts must be >= 1");
  if (vote_window < 1) throw std::invalid_argument("perception: vote_window must be >= 1");
  if (!(vote_fraction > 0.0) || vote_fraction > 1.0) {
    throw std::invalid_argument("perception: vote_fraction must be in (0, 1]");
  }
}

PointCloud sense(const WorldModel& world, double x, double y, double heading,
                 const SensorConfig& cfg) {
  cfg.validate();
  PointCloud cloud;
  const Point3 origin{x, y, cfg.mount_height};
  for (int iy = 0; iy < cfg.rays_vertical; ++iy) {
    const double el = cfg.rays_vertical == 1
                          ? 0.0
                          : -0.5 * cfg.vertical_fov +
                                cfg.vertical_fov * iy / (cfg.rays_vertical - 1);
    for (int ix = 0; ix < cfg.rays_horizontal; ++ix) {
      const double az = cfg.rays_horizontal == 1
                            ? 0.0
                            : -0.5 * cfg.horizontal_fov +
                                  cfg.horizontal_fov * ix /
                                      (cfg.rays_horizontal - 1);
      const double yaw = heading + az;
      const Point3 dir{std::cos(el) * std::cos(yaw), std::cos(el) * std::sin(yaw),
                       std::sin(el)};
      double best = std::numeric_limits<double>::infinity();
      for (const Box& box : world.boxes) {
        if (auto t = ray_box(origin, dir, box)) best = std::min(best, *t);
      }
      for (const Pedestrian& ped : world.pedestrians) {
        const auto [px, py] = ped.position();
        if (auto t = ray_cylinder(origin, dir, px, py, ped.radius, 0.0,
                                  ped.height)) {
          best = std::min(best, *t);
        }
      }
      if (best <= cfg.max_range) {
        cloud.points.push_back(Point3{origin.x + best * dir.x,
                                      origin.y + best * dir.y,
                                      origin.z + best * dir.z});
      }
    }
  }
  return cloud;
}

ClusterLabels dbscan(const PointCloud& cloud, double eps, int min_pts) {
  if (!(eps > 0.0)) throw std::invalid_argument("dbscan: eps must be > 0");
  if (min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be >= 1");

  const std::size_t n = cloud.points.size();
  ClusterLabels out;
  out.labels.assign(n, kNoise);
  if (n == 0) return out;

  const KdTree tree(cloud);
  std::vector<std::vector<std::size_t>> nbrs(n);
  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hits = tree.points_within(cloud.points[i], eps);
    nbrs[i].reserve(hits.size());
    for (const auto& h : hits) nbrs[i].push_back(h.index);
    core[i] = nbrs[i].size() >= static_cast<std::size_t>(min_pts);
  }

  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || out.labels[i] != kNoise) continue;
    const int id = next++;
    out.labels[i] = id;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : nbrs[u]) {
        if (out.labels[v] == kNoise) {
          out.labels[v] = id;
          if (core[v]) stack.push_back(v);
        }
      }
    }
  }
  out.cluster_count = next;
  return out;
}

ClusterClassifier::ClusterClassifier(PerceptionParams params)
    : params_(std::move(params)) {
  params_.validate();
}

void ClusterClassifier::reset() {
  tracks_.clear();
  next_id_ = 0;
}

ClassifyResult ClusterClassifier::classify(const PointCloud& cloud,
                                           const ClusterLabels& labels,
                                           double now) {
  struct Cluster {
    std::vector<std::size_t> indices;
    Point3 centroid;
    Point3 lo, hi;
  };
  std::vector<Cluster> clusters(labels.cluster_count);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const int id = labels.labels[i];
    if (id < 0) continue;
    Cluster& c = clusters[id];
    const Point3& p = cloud.points[i];
    if (c.indices.empty()) {
      c.lo = c.hi = p;
    } else {
      c.lo = Point3{std::min(c.lo.x, p.x), std::min(c.lo.y, p.y), std::min(c.lo.z, p.z)};
      c.hi = Point3{std::max(c.hi.x, p.x), std::max(c.hi.y, p.y), std::max(c.hi.z, p.z)};
    }
    c.centroid.x += p.x;
    c.centroid.y += p.y;
    c.centroid.z += p.z;
    c.indices.push_back(i);
  }
  for (Cluster& c : clusters) {
    if (!c.indices.empty()) {
      const double n = static_cast<double>(c.indices.size());
      c.centroid.x /= n;
      c.centroid.y /= n;
      c.centroid.z /= n;
    }
  }

  // Greedy nearest association, candidate pairs sorted by distance.
  struct Pair {
    double d;
    std::size_t cluster;
    std::size_t track;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t t = 0; t < tracks_.size(); ++t) {
      const double d = std::sqrt(dist_sq(clusters[c].centroid, tracks_[t].centroid));
      if (d <= params_.association_gate) pairs.push_back(Pair{d, c, t});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.cluster != b.cluster) return a.cluster < b.cluster;
    return a.track < b.track;
  });
  std::vector<int> cluster_track(clusters.size(), -1);
  for (ClusterTrack& t : tracks_) t.matched_this_frame = false;
  for (const Pair& pr : pairs) {
    if (cluster_track[pr.cluster] != -1 || tracks_[pr.track].matched_this_frame)
      continue;
    cluster_track[pr.cluster] = static_cast<int>(pr.track);
    tracks_[pr.track].matched_this_frame = true;
  }

  auto push_window = [](std::deque<bool>& q, bool v, int cap) {
    q.push_back(v);
    while (static_cast<int>(q.size()) > cap) q.pop_front();
  };

  ClassifyResult result;
  result.static_cloud.frame_time = cloud.frame_time;
  std::vector<bool> is_dynamic(clusters.size(), false);

  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (clusters[c].indices.empty()) continue;
    const int ti = cluster_track[c];
    if (ti < 0) {
      // No history: provisional track, static this frame.
      ClusterTrack nt;
      nt.id = next_id_++;
      nt.centroid = clusters[c].centroid;
      nt.last_time = now;
      nt.matched_this_frame = true;
      push_window(nt.hits, true, params_.miss_window);
      tracks_.push_back(std::move(nt));
      continue;
    }
    ClusterTrack& track = tracks_[ti];
    const double dt = now - track.last_time;
    double speed = 0.0;
    double vx = 0, vy = 0, vz = 0;
    if (dt > 0.0) {
      vx = (clusters[c].centroid.x - track.centroid.x) / dt;
      vy = (clusters[c].centroid.y - track.centroid.y) / dt;
      vz = (clusters[c].centroid.z - track.centroid.z) / dt;
      // Planar speed: vertical centroid drift is a visibility artifact for a
      // ground robot, not obstacle motion.
      speed = std::sqrt(vx * vx + vy * vy);
    }
    const bool vote = speed > params_.v_dyn;
    push_window(track.votes, vote, params_.vote_window);
    push_window(track.hits, true, params_.miss_window);
    const int dyn_votes =
        static_cast<int>(std::count(track.votes.begin(), track.votes.end(), true));
    const double fraction =
        static_cast<double>(dyn_votes) / static_cast<double>(params_.vote_window);
    if (vote && fraction >= params_.vote_fraction) {
      is_dynamic[c] = true;
      DynamicDetection det;
      det.indices = clusters[c].indices;
      det.centroid = clusters[c].centroid;
      det.bbox_min = clusters[c].lo;
      det.bbox_max = clusters[c].hi;
      det.vx = vx;
      det.vy = vy;
      det.vz = vz;
      det.track_id = track.id;
      result.detections.push_back(std::move(det));
    }
    track.centroid = clusters[c].centroid;
    track.last_time = now;
  }

  // Unmatched tracks take a miss; drop tracks whose miss ratio exceeds t_ratio.
  for (ClusterTrack& t : tracks_) {
    if (!t.matched_this_frame) push_window(t.hits, false, params_.miss_window);
  }
  std::erase_if(tracks_, [&](const ClusterTrack& t) {
    if (t.hits.empty()) return true;
    const int misses =
        static_cast<int>(std::count(t.hits.begin(), t.hits.end(), false));
    const double ratio =
        static_cast<double>(misses) / static_cast<double>(t.hits.size());
    return ratio > params_.t_ratio;
  });

  // Everything not classified dynamic (noise included) stays static.
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const int id = labels.labels[i];
    if (id >= 0 && is_dynamic[id]) continue;
    result.static_cloud.points.push_back(cloud.points[i]);
  }
  return result;
}

}  // namespace ftdnav
