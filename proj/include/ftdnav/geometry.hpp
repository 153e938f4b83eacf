#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace ftdnav {

/// A 3-D point in the world frame, meters.
struct Point3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double planar_dist_sq(const Point3& a, double qx, double qy) {
  const double dx = a.x - qx;
  const double dy = a.y - qy;
  return dx * dx + dy * dy;
}

inline double dist_sq(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

/// An ordered, index-addressable point set stamped with the simulation clock.
struct PointCloud {
  std::vector<Point3> points;
  double frame_time{0.0};

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Integer voxel index of a coordinate. Boundary points belong to the
/// higher-index voxel (floor semantics).
inline std::int64_t voxel_index(double c, double resolution) {
  return static_cast<std::int64_t>(std::floor(c / resolution));
}

/// Collapses the cloud onto a fixed grid: one point per occupied voxel,
/// placed at the voxel center. Output order is first-seen input order,
/// which makes the result deterministic and idempotent.
PointCloud voxel_downsample(const PointCloud& cloud, double resolution);

/// Keeps only points whose (x, y) lies within the square window
/// [cx - half_extent, cx + half_extent] x [cy - half_extent, cy + half_extent].
PointCloud crop_planar(const PointCloud& cloud, double cx, double cy,
                       double half_extent);

}  // namespace ftdnav
