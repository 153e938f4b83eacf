#pragma once

#include <optional>
#include <vector>

#include "ftdnav/geometry.hpp"
#include "ftdnav/kdtree.hpp"

namespace ftdnav {

/// Vertical slice of the world the planar robot can actually collide with.
struct HeightBand {
  double z_min{0.05};
  double z_max{0.4};
};

struct FtdHit {
  Point3 point;
  std::size_t index{0};
  double dist_sq{0.0};  // planar
  bool dynamic{false};
};

/// Forward-time-domain map: one KD-tree over the static cloud plus one per
/// horizon step over the predicted dynamic clouds (N+1 trees total).
/// Immutable after build; queries are planar and restricted to a height band.
class FtdMap {
 public:
  FtdMap() = default;
  FtdMap(PointCloud static_cloud, std::vector<PointCloud> dynamic_clouds);

  int horizon() const { return static_cast<int>(dyn_trees_.size()); }
  double build_time() const { return build_time_; }

  const KdTree& static_tree() const { return static_tree_; }
  const KdTree& dynamic_tree(int k) const;

  std::size_t static_size() const { return static_tree_.size(); }
  std::size_t dynamic_size(int k) const { return dynamic_tree(k).size(); }

  /// Nearest in-band point of P_static at planar distance.
  std::optional<FtdHit> nearest_static(double x, double y,
                                       const HeightBand& band) const;

  /// Nearest in-band point of P_dyn_k.
  std::optional<FtdHit> nearest_dynamic_at_step(int k, double x, double y,
                                                const HeightBand& band) const;

  /// Nearest in-band point of P_static U P_dyn_k. Ties prefer static, then
  /// the smaller original index.
  std::optional<FtdHit> nearest_at_step(int k, double x, double y,
                                        const HeightBand& band) const;

  /// The nearest in-band point with planar dist <= delta, if any (boundary
  /// counts as collision).
  std::optional<FtdHit> collides_at_step(int k, double x, double y,
                                         const HeightBand& band,
                                         double delta) const;

  /// Same collision test against the static tree only.
  std::optional<FtdHit> static_collision(double x, double y,
                                         const HeightBand& band,
                                         double delta) const;

 private:
  KdTree static_tree_;
  std::vector<KdTree> dyn_trees_;
  double build_time_{0.0};
};

FtdMap build_ftd(PointCloud static_cloud, std::vector<PointCloud> dynamic_clouds);

}  // namespace ftdnav
