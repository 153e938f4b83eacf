#pragma once

// Independent brute-force reference implementations used to check the
// production code. Everything here is deliberately O(n^2)-style and
// straight-line so it can be trusted by inspection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "ftdnav/geometry.hpp"

namespace oracle {

using ftdnav::Point3;
using ftdnav::PointCloud;

struct Hit {
  Point3 point;
  std::size_t index;
  double dist_sq;
};

inline std::optional<Hit> nearest_scan(const PointCloud& cloud,
                                       const Point3& q) {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const double d = ftdnav::dist_sq(cloud.points[i], q);
    if (!best || d < best->dist_sq) {
      best = Hit{cloud.points[i], i, d};
    }
  }
  return best;
}

inline std::vector<Hit> radius_scan(const PointCloud& cloud, const Point3& q,
                                    double radius) {
  std::vector<Hit> out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const double d = ftdnav::dist_sq(cloud.points[i], q);
    if (d <= radius * radius) out.push_back(Hit{cloud.points[i], i, d});
  }
  std::sort(out.begin(), out.end(), [](const Hit& a, const Hit& b) {
    return a.dist_sq != b.dist_sq ? a.dist_sq < b.dist_sq : a.index < b.index;
  });
  return out;
}

inline std::optional<Hit> nearest_planar_scan(const PointCloud& cloud,
                                              double qx, double qy,
                                              double z_min, double z_max) {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    if (p.z < z_min || p.z > z_max) continue;
    const double d = ftdnav::planar_dist_sq(p, qx, qy);
    if (!best || d < best->dist_sq) {
      best = Hit{p, i, d};
    }
  }
  return best;
}

inline std::size_t distinct_voxel_count(const PointCloud& cloud, double res) {
  std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> keys;
  for (const Point3& p : cloud.points) {
    keys.insert({static_cast<std::int64_t>(std::floor(p.x / res)),
                 static_cast<std::int64_t>(std::floor(p.y / res)),
                 static_cast<std::int64_t>(std::floor(p.z / res))});
  }
  return keys.size();
}

inline PointCloud random_cloud(std::size_t n, double lo, double hi,
                               std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points.push_back(Point3{dist(rng), dist(rng), dist(rng)});
  }
  return cloud;
}

// Reference DBSCAN: core points have >= min_pts neighbors within eps
// (counting themselves); clusters are connected components of core points
// under eps-reachability plus border points, assigned in ascending scan
// order. Returns -1 for noise.
inline std::vector<int> dbscan_scan(const PointCloud& cloud, double eps,
                                    int min_pts) {
  const std::size_t n = cloud.points.size();
  const double eps_sq = eps * eps;
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (ftdnav::dist_sq(cloud.points[i], cloud.points[j]) <= eps_sq) {
        nbrs[i].push_back(j);
      }
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = nbrs[i].size() >= static_cast<std::size_t>(min_pts);
  }
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || label[i] != -1) continue;
    const int id = next++;
    std::vector<std::size_t> stack{i};
    label[i] = id;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : nbrs[u]) {
        if (label[v] == -1) {
          label[v] = id;
          if (core[v]) stack.push_back(v);
        }
      }
    }
  }
  return label;
}

}  // namespace oracle
