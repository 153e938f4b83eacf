#include "ftdnav/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ftdnav {

double Pedestrian::path_length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const double dx = waypoints[i].first - waypoints[i - 1].first;
    const double dy = waypoints[i].second - waypoints[i - 1].second;
    total += std::hypot(dx, dy);
  }
  return total;
}

std::pair<double, double> Pedestrian::position() const {
  if (waypoints.empty()) return {0.0, 0.0};
  if (waypoints.size() == 1) return waypoints.front();
  const double total = path_length();
  double s = arc_pos;
  if (loop && total > 0.0) {
    // Pace back and forth: map accumulated arc length onto a triangle wave.
    s = std::fmod(s, 2.0 * total);
    if (s < 0.0) s += 2.0 * total;
    if (s > total) s = 2.0 * total - s;
  } else {
    s = std::clamp(s, 0.0, total);
  }
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const double dx = waypoints[i].first - waypoints[i - 1].first;
    const double dy = waypoints[i].second - waypoints[i - 1].second;
    const double seg = std::hypot(dx, dy);
    if (s <= seg || i + 1 == waypoints.size()) {
      const double f = seg > 0.0 ? std::min(s / seg, 1.0) : 0.0;
      return {waypoints[i - 1].first + f * dx, waypoints[i - 1].second + f * dy};
    }
    s -= seg;
  }
  return waypoints.back();
}

void step_world(WorldModel& world, double dt) {
  for (Pedestrian& ped : world.pedestrians) {
    ped.arc_pos += ped.speed * dt;
    if (!ped.loop) {
      ped.arc_pos = std::min(ped.arc_pos, ped.path_length());
    }
  }
}

std::optional<double> ray_box(const Point3& origin, const Point3& dir,
                              const Box& box) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  const double lo[3] = {box.min.x, box.min.y, box.min.z};
  const double hi[3] = {box.max.x, box.max.y, box.max.z};
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a];
    double tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

std::optional<double> ray_cylinder(const Point3& origin, const Point3& dir,
                                   double cx, double cy, double radius,
                                   double z_min, double z_max) {
  double best = std::numeric_limits<double>::infinity();
  // Side surface: |o_xy + t d_xy - c|^2 = r^2.
  const double ox = origin.x - cx;
  const double oy = origin.y - cy;
  const double a = dir.x * dir.x + dir.y * dir.y;
  const double b = 2.0 * (ox * dir.x + oy * dir.y);
  const double c = ox * ox + oy * oy - radius * radius;
  if (a > 0.0) {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t < 0.0) continue;
        const double z = origin.z + t * dir.z;
        if (z >= z_min && z <= z_max) best = std::min(best, t);
      }
    }
  }
  // End caps.
  if (dir.z != 0.0) {
    for (double zc : {z_min, z_max}) {
      const double t = (zc - origin.z) / dir.z;
      if (t < 0.0) continue;
      const double px = ox + t * dir.x;
      const double py = oy + t * dir.y;
      if (px * px + py * py <= radius * radius) best = std::min(best, t);
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

namespace {

double rect_planar_distance(double x, double y, double lo_x, double lo_y,
                            double hi_x, double hi_y) {
  const double dx = std::max({lo_x - x, 0.0, x - hi_x});
  const double dy = std::max({lo_y - y, 0.0, y - hi_y});
  return std::hypot(dx, dy);
}

}  // namespace

double true_clearance(const WorldModel& world, double x, double y,
                      double height) {
  double best = std::numeric_limits<double>::infinity();
  for (const Box& box : world.boxes) {
    // Bodies entirely above the robot do not constrain it.
    if (box.min.z >= height || box.max.z <= 0.0) continue;
    best = std::min(best, rect_planar_distance(x, y, box.min.x, box.min.y,
                                               box.max.x, box.max.y));
  }
  for (const Pedestrian& ped : world.pedestrians) {
    if (ped.height <= 0.0) continue;
    const auto [px, py] = ped.position();
    const double d = std::hypot(x - px, y - py) - ped.radius;
    best = std::min(best, std::max(d, 0.0));
  }
  return best;
}

}  // namespace ftdnav
