#include "ftdnav/kdtree.hpp"

#include <algorithm>
#include <limits>

namespace ftdnav {

namespace {

inline double coord(const Point3& p, int axis) {
  return axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
}

// Lower bound on squared distance from q to the box [lo, hi].
inline double box_dist_sq(const double* lo, const double* hi, const Point3& q) {
  double d = 0.0;
  const double qc[3] = {q.x, q.y, q.z};
  for (int a = 0; a < 3; ++a) {
    double diff = 0.0;
    if (qc[a] < lo[a]) diff = lo[a] - qc[a];
    else if (qc[a] > hi[a]) diff = qc[a] - hi[a];
    d += diff * diff;
  }
  return d;
}

// Lower bound on planar squared distance from (qx, qy) to the box footprint.
inline double box_planar_dist_sq(const double* lo, const double* hi, double qx,
                                 double qy) {
  double d = 0.0;
  const double qc[2] = {qx, qy};
  for (int a = 0; a < 2; ++a) {
    double diff = 0.0;
    if (qc[a] < lo[a]) diff = lo[a] - qc[a];
    else if (qc[a] > hi[a]) diff = qc[a] - hi[a];
    d += diff * diff;
  }
  return d;
}

inline bool better(double d_sq, std::size_t idx, const KdTree::Hit& best) {
  return d_sq < best.dist_sq || (d_sq == best.dist_sq && idx < best.index);
}

}  // namespace

KdTree::KdTree(const PointCloud& cloud) {
  pts_.reserve(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    pts_.push_back(Entry{cloud.points[i], i});
  }
  if (!pts_.empty()) {
    nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(pts_.size()));
  }
}

int KdTree::build(int begin, int end) {
  Node node;
  for (int a = 0; a < 3; ++a) {
    node.lo[a] = std::numeric_limits<double>::infinity();
    node.hi[a] = -std::numeric_limits<double>::infinity();
  }
  for (int i = begin; i < end; ++i) {
    const double c[3] = {pts_[i].p.x, pts_[i].p.y, pts_[i].p.z};
    for (int a = 0; a < 3; ++a) {
      node.lo[a] = std::min(node.lo[a], c[a]);
      node.hi[a] = std::max(node.hi[a], c[a]);
    }
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  // Split the widest axis at the median.
  int axis = 0;
  double width = node.hi[0] - node.lo[0];
  for (int a = 1; a < 3; ++a) {
    const double w = node.hi[a] - node.lo[a];
    if (w > width) {
      width = w;
      axis = a;
    }
  }
  const int mid = begin + (end - begin) / 2;
  std::nth_element(pts_.begin() + begin, pts_.begin() + mid, pts_.begin() + end,
                   [axis](const Entry& a, const Entry& b) {
                     return coord(a.p, axis) < coord(b.p, axis);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<Point3> KdTree::points_in_input_order() const {
  std::vector<Point3> out(pts_.size());
  for (const Entry& e : pts_) out[e.index] = e.p;
  return out;
}

void KdTree::search_nearest(int node_id, const Point3& q, Hit& best,
                            bool& found) const {
  const Node& node = nodes_[node_id];
  if (found && box_dist_sq(node.lo, node.hi, q) > best.dist_sq) return;
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const double d = dist_sq(pts_[i].p, q);
      if (!found || better(d, pts_[i].index, best)) {
        best = Hit{pts_[i].p, pts_[i].index, d};
        found = true;
      }
    }
    return;
  }
  const double dl = box_dist_sq(nodes_[node.left].lo, nodes_[node.left].hi, q);
  const double dr = box_dist_sq(nodes_[node.right].lo, nodes_[node.right].hi, q);
  if (dl <= dr) {
    search_nearest(node.left, q, best, found);
    search_nearest(node.right, q, best, found);
  } else {
    search_nearest(node.right, q, best, found);
    search_nearest(node.left, q, best, found);
  }
}

std::optional<KdTree::Hit> KdTree::nearest(const Point3& q) const {
  if (pts_.empty()) return std::nullopt;
  Hit best;
  bool found = false;
  search_nearest(root_, q, best, found);
  return best;
}

void KdTree::search_radius(int node_id, const Point3& q, double r_sq,
                           std::vector<Hit>& out) const {
  const Node& node = nodes_[node_id];
  if (box_dist_sq(node.lo, node.hi, q) > r_sq) return;
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const double d = dist_sq(pts_[i].p, q);
      if (d <= r_sq) out.push_back(Hit{pts_[i].p, pts_[i].index, d});
    }
    return;
  }
  search_radius(node.left, q, r_sq, out);
  search_radius(node.right, q, r_sq, out);
}

std::vector<KdTree::Hit> KdTree::points_within(const Point3& q,
                                               double radius) const {
  std::vector<Hit> out;
  if (pts_.empty() || radius < 0.0) return out;
  search_radius(root_, q, radius * radius, out);
  std::sort(out.begin(), out.end(), [](const Hit& a, const Hit& b) {
    return a.dist_sq != b.dist_sq ? a.dist_sq < b.dist_sq : a.index < b.index;
  });
  return out;
}

void KdTree::search_planar(int node_id, double qx, double qy, double z_min,
                           double z_max, Hit& best, bool& found) const {
  const Node& node = nodes_[node_id];
  if (node.hi[2] < z_min || node.lo[2] > z_max) return;
  if (found && box_planar_dist_sq(node.lo, node.hi, qx, qy) > best.dist_sq)
    return;
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const Point3& p = pts_[i].p;
      if (p.z < z_min || p.z > z_max) continue;
      const double d = planar_dist_sq(p, qx, qy);
      if (!found || better(d, pts_[i].index, best)) {
        best = Hit{p, pts_[i].index, d};
        found = true;
      }
    }
    return;
  }
  const double dl = box_planar_dist_sq(nodes_[node.left].lo, nodes_[node.left].hi,
                                       qx, qy);
  const double dr = box_planar_dist_sq(nodes_[node.right].lo,
                                       nodes_[node.right].hi, qx, qy);
  if (dl <= dr) {
    search_planar(node.left, qx, qy, z_min, z_max, best, found);
    search_planar(node.right, qx, qy, z_min, z_max, best, found);
  } else {
    search_planar(node.right, qx, qy, z_min, z_max, best, found);
    search_planar(node.left, qx, qy, z_min, z_max, best, found);
  }
}

std::optional<KdTree::Hit> KdTree::nearest_planar(double qx, double qy,
                                                  double z_min,
                                                  double z_max) const {
  if (pts_.empty()) return std::nullopt;
  Hit best;
  bool found = false;
  search_planar(root_, qx, qy, z_min, z_max, best, found);
  if (!found) return std::nullopt;
  return best;
}

}  // namespace ftdnav
