#include "ftdnav/ftd_map.hpp"

#include <stdexcept>

namespace ftdnav {

FtdMap::FtdMap(PointCloud static_cloud, std::vector<PointCloud> dynamic_clouds)
    : static_tree_(static_cloud), build_time_(static_cloud.frame_time) {
  dyn_trees_.reserve(dynamic_clouds.size());
  for (const PointCloud& cloud : dynamic_clouds) {
    dyn_trees_.emplace_back(cloud);
  }
}

FtdMap build_ftd(PointCloud static_cloud, std::vector<PointCloud> dynamic_clouds) {
  return FtdMap(std::move(static_cloud), std::move(dynamic_clouds));
}

const KdTree& FtdMap::dynamic_tree(int k) const {
  if (k < 0 || k >= horizon()) {
    throw std::out_of_range("FtdMap: horizon step out of range");
  }
  return dyn_trees_[static_cast<std::size_t>(k)];
}

std::optional<FtdHit> FtdMap::nearest_static(double x, double y,
                                             const HeightBand& band) const {
  const auto hit = static_tree_.nearest_planar(x, y, band.z_min, band.z_max);
  if (!hit) return std::nullopt;
  return FtdHit{hit->point, hit->index, hit->dist_sq, false};
}

std::optional<FtdHit> FtdMap::nearest_dynamic_at_step(
    int k, double x, double y, const HeightBand& band) const {
  const auto hit = dynamic_tree(k).nearest_planar(x, y, band.z_min, band.z_max);
  if (!hit) return std::nullopt;
  return FtdHit{hit->point, hit->index, hit->dist_sq, true};
}

std::optional<FtdHit> FtdMap::nearest_at_step(int k, double x, double y,
                                              const HeightBand& band) const {
  const auto s = nearest_static(x, y, band);
  const auto d = nearest_dynamic_at_step(k, x, y, band);
  if (!s) return d;
  if (!d) return s;
  // Static wins ties.
  return d->dist_sq < s->dist_sq ? d : s;
}

std::optional<FtdHit> FtdMap::collides_at_step(int k, double x, double y,
                                               const HeightBand& band,
                                               double delta) const {
  if (!(delta > 0.0)) throw std::invalid_argument("collides_at_step: delta must be > 0");
  const auto hit = nearest_at_step(k, x, y, band);
  if (hit && hit->dist_sq <= delta * delta) return hit;
  return std::nullopt;
}

std::optional<FtdHit> FtdMap::static_collision(double x, double y,
                                               const HeightBand& band,
                                               double delta) const {
  if (!(delta > 0.0)) throw std::invalid_argument("static_collision: delta must be > 0");
  const auto hit = nearest_static(x, y, band);
  if (hit && hit->dist_sq <= delta * delta) return hit;
  return std::nullopt;
}

}  // namespace ftdnav
