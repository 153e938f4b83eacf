#pragma once

#include <optional>
#include <vector>

#include "ftdnav/geometry.hpp"

namespace ftdnav {

/// Static 3-D KD-tree over a PointCloud. Stores original point indices and
/// answers exact queries: every result equals what a linear scan over the
/// input would return, with ties broken by the smallest original index.
class KdTree {
 public:
  struct Hit {
    Point3 point;
    std::size_t index{0};
    double dist_sq{0.0};
  };

  KdTree() = default;
  explicit KdTree(const PointCloud& cloud);

  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }

  /// Stored points in original index order (reconstructs the input multiset).
  std::vector<Point3> points_in_input_order() const;

  /// Nearest stored point by squared Euclidean distance.
  std::optional<Hit> nearest(const Point3& q) const;

  /// All stored points with dist_sq <= radius^2, sorted by (dist_sq, index).
  std::vector<Hit> points_within(const Point3& q, double radius) const;

  /// Nearest point by planar (x, y) squared distance among points with
  /// z in [z_min, z_max]. Hit.dist_sq is the planar squared distance.
  std::optional<Hit> nearest_planar(double qx, double qy, double z_min,
                                    double z_max) const;

 private:
  struct Node {
    // Axis-aligned bounds of all points under this node.
    double lo[3], hi[3];
    int left{-1}, right{-1};  // children; -1 for leaf
    int begin{0}, end{0};     // leaf range into pts_/idx_
  };

  struct Entry {
    Point3 p;
    std::size_t index;
  };

  int build(int begin, int end);

  void search_nearest(int node, const Point3& q, Hit& best, bool& found) const;
  void search_radius(int node, const Point3& q, double r_sq,
                     std::vector<Hit>& out) const;
  void search_planar(int node, double qx, double qy, double z_min, double z_max,
                     Hit& best, bool& found) const;

  std::vector<Entry> pts_;
  std::vector<Node> nodes_;
  int root_{-1};

  static constexpr int kLeafSize = 12;
};

}  // namespace ftdnav
