#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ftdnav/geometry.hpp"

namespace ftdnav {

/// Axis-aligned box in world coordinates.
struct Box {
  Point3 min;
  Point3 max;
};

/// Cylindrical pedestrian following a waypoint polyline at constant speed.
struct Pedestrian {
  double radius{0.3};
  double height{1.7};
  double speed{1.0};
  std::vector<std::pair<double, double>> waypoints;  // (x, y), >= 1 entries
  bool loop{true};
  double arc_pos{0.0};  // distance travelled along the polyline

  /// Current footprint center.
  std::pair<double, double> position() const;
  double path_length() const;
};

/// Static boxes plus pedestrians. Compound bodies (tables, blackboards)
/// are compiled down to their member boxes when the scenario is loaded.
struct WorldModel {
  std::vector<Box> boxes;
  std::vector<Pedestrian> pedestrians;
  // Plot/crop extents; not implicit walls.
  double bounds_min_x{-10}, bounds_min_y{-10}, bounds_max_x{10}, bounds_max_y{10};
};

/// Advances every pedestrian by speed * dt of arc length along its polyline,
/// looping or stopping at the final waypoint.
void step_world(WorldModel& world, double dt);

/// First-hit distance of a ray against one box (slab method) or pedestrian
/// cylinder. Returns the ray parameter t >= 0 of the entry point, if any.
std::optional<double> ray_box(const Point3& origin, const Point3& dir,
                              const Box& box);
std::optional<double> ray_cylinder(const Point3& origin, const Point3& dir,
                                   double cx, double cy, double radius,
                                   double z_min, double z_max);

/// Planar distance from a point to the world's nearest obstacle surface,
/// considering only bodies that overlap the height interval [0, height].
/// Returns +infinity when no such body exists; 0 inside a footprint.
double true_clearance(const WorldModel& world, double x, double y,
                      double height);

}  // namespace ftdnav
