#pragma once

#include <string>
#include <vector>

#include "ftdnav/nmpc.hpp"
#include "ftdnav/perception.hpp"
#include "ftdnav/tracking.hpp"
#include "ftdnav/world.hpp"

namespace ftdnav {

enum class PlannerKind { kOurs, kEllipsoidDcbf, kDepthCbfQp };

std::string planner_name(PlannerKind kind);
PlannerKind planner_from_name(const std::string& name);

/// Four legs plus an elevated top slab.
struct TableBody {
  double cx{0}, cy{0};
  double size_x{1.2}, size_y{0.8};
  double top_z_min{0.7}, top_z_max{0.75};
  double leg_size{0.1};
};

/// Two legs carrying an elevated slab; the space between the legs is free
/// below the slab.
struct BlackboardBody {
  double cx{0}, cy{0};
  double width{2.0};   // leg-to-leg span along y
  double depth{0.12};  // slab thickness along x
  double slab_z_min{0.9}, slab_z_max{1.4};
  double leg_size{0.1};
};

struct ScenarioConfig {
  std::string name{"scenario"};
  unsigned seed{1};
  double timeout_s{60.0};

  RobotState start{0, 0, 0};
  double goal_x{5.0}, goal_y{0.0};
  double goal_tolerance{0.2};
  double robot_radius{0.25};
  double robot_height{0.4};

  std::vector<Box> boxes;
  std::vector<TableBody> tables;
  std::vector<BlackboardBody> blackboards;
  std::vector<Pedestrian> pedestrians;
  double bounds_min_x{-2}, bounds_min_y{-6}, bounds_max_x{14}, bounds_max_y{6};

  SensorConfig sensor;
  PerceptionParams perception;
  TrackingParams tracking;
  NmpcParams nmpc;
  RiskParams risk;
  double sensor_noise_sigma{0.0};

  PlannerKind planner{PlannerKind::kOurs};

  // Rate schedule in physics ticks.
  double physics_dt{0.01};
  int perception_every{3};
  int planning_every{10};

  void validate() const;
  WorldModel make_world() const;
};

ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario_json(const std::string& text);

struct SuiteConfig {
  std::vector<std::string> scenario_paths;
  std::vector<PlannerKind> planners;
};

SuiteConfig load_suite(const std::string& path);

}  // namespace ftdnav
