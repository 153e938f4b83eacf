#include "ftdnav/geometry.hpp"

#include <stdexcept>
#include <unordered_set>

namespace ftdnav {

namespace {

struct VoxelKey {
  std::int64_t i, j, k;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& v) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t w : {static_cast<std::uint64_t>(v.i),
                            static_cast<std::uint64_t>(v.j),
                            static_cast<std::uint64_t>(v.k)}) {
      h ^= w;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, double resolution) {
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("voxel_downsample: resolution must be > 0");
  }
  PointCloud out;
  out.frame_time = cloud.frame_time;
  std::unordered_set<VoxelKey, VoxelKeyHash> seen;
  seen.reserve(cloud.points.size());
  for (const Point3& p : cloud.points) {
    const VoxelKey key{voxel_index(p.x, resolution), voxel_index(p.y, resolution),
                       voxel_index(p.z, resolution)};
    if (seen.insert(key).second) {
      out.points.push_back(Point3{(static_cast<double>(key.i) + 0.5) * resolution,
                                  (static_cast<double>(key.j) + 0.5) * resolution,
                                  (static_cast<double>(key.k) + 0.5) * resolution});
    }
  }
  return out;
}

PointCloud crop_planar(const PointCloud& cloud, double cx, double cy,
                       double half_extent) {
  PointCloud out;
  out.frame_time = cloud.frame_time;
  for (const Point3& p : cloud.points) {
    if (std::abs(p.x - cx) <= half_extent && std::abs(p.y - cy) <= half_extent) {
      out.points.push_back(p);
    }
  }
  return out;
}

}  // namespace ftdnav
