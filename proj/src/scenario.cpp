#include "ftdnav/scenario.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ftdnav {

using nlohmann::json;

std::string planner_name(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::kOurs: return "ours";
    case PlannerKind::kEllipsoidDcbf: return "dcbf-ellipsoid";
    case PlannerKind::kDepthCbfQp: return "depth-cbf-qp";
  }
  return "unknown";
}

PlannerKind planner_from_name(const std::string& name) {
  if (name == "ours") return PlannerKind::kOurs;
  if (name == "dcbf-ellipsoid") return PlannerKind::kEllipsoidDcbf;
  if (name == "depth-cbf-qp") return PlannerKind::kDepthCbfQp;
  throw std::invalid_argument(
      "unknown planner '" + name +
      "' (valid: ours, dcbf-ellipsoid, depth-cbf-qp)");
}

void ScenarioConfig::validate() const {
  if (!(timeout_s > 0.0)) throw std::invalid_argument("scenario: timeout_s must be > 0");
  if (!(goal_tolerance > 0.0)) throw std::invalid_argument("scenario: goal_tolerance must be > 0");
  if (!(robot_radius > 0.0)) throw std::invalid_argument("scenario: robot_radius must be > 0");
  if (!(robot_height > 0.0)) throw std::invalid_argument("scenario: robot_height must be > 0");
  if (!(physics_dt > 0.0)) throw std::invalid_argument("scenario: physics_dt must be > 0");
  if (perception_every < 1 || planning_every < 1) {
    throw std::invalid_argument("scenario: rate divisors must be >= 1");
  }
  for (const Pedestrian& ped : pedestrians) {
    if (ped.speed < 0.0) throw std::invalid_argument("scenario: pedestrian speed must be >= 0");
    if (ped.waypoints.empty()) throw std::invalid_argument("scenario: pedestrian needs waypoints");
  }
  sensor.validate();
  perception.validate();
  nmpc.validate();
}

WorldModel ScenarioConfig::make_world() const {
  WorldModel world;
  world.bounds_min_x = bounds_min_x;
  world.bounds_min_y = bounds_min_y;
  world.bounds_max_x = bounds_max_x;
  world.bounds_max_y = bounds_max_y;
  world.boxes = boxes;

  for (const TableBody& t : tables) {
    const double hx = t.size_x / 2.0, hy = t.size_y / 2.0, leg = t.leg_size;
    // Four legs at the corners, then the top slab.
    for (int sx : {-1, 1}) {
      for (int sy : {-1, 1}) {
        const double lx = t.cx + sx * (hx - leg / 2.0);
        const double ly = t.cy + sy * (hy - leg / 2.0);
        world.boxes.push_back(Box{{lx - leg / 2.0, ly - leg / 2.0, 0.0},
                                  {lx + leg / 2.0, ly + leg / 2.0, t.top_z_min}});
      }
    }
    world.boxes.push_back(Box{{t.cx - hx, t.cy - hy, t.top_z_min},
                              {t.cx + hx, t.cy + hy, t.top_z_max}});
  }

  for (const BlackboardBody& b : blackboards) {
    const double hy = b.width / 2.0, hd = b.depth / 2.0, leg = b.leg_size;
    for (int sy : {-1, 1}) {
      const double ly = b.cy + sy * (hy - leg / 2.0);
      world.boxes.push_back(Box{{b.cx - leg / 2.0, ly - leg / 2.0, 0.0},
                                {b.cx + leg / 2.0, ly + leg / 2.0, b.slab_z_min}});
    }
    world.boxes.push_back(Box{{b.cx - hd, b.cy - hy, b.slab_z_min},
                              {b.cx + hd, b.cy + hy, b.slab_z_max}});
  }

  world.pedestrians = pedestrians;
  return world;
}

namespace {

// Error messages name the offending field.
template <typename T>
void read_into(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("scenario field '") + key +
                                  "': " + e.what());
    }
  }
}

Box parse_box(const json& j) {
  const auto lo = j.at("min").get<std::vector<double>>();
  const auto hi = j.at("max").get<std::vector<double>>();
  if (lo.size() != 3 || hi.size() != 3) {
    throw std::invalid_argument("scenario field 'boxes': min/max need 3 coords");
  }
  return Box{{lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]}};
}

}  // namespace

ScenarioConfig parse_scenario_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario parse error: ") + e.what());
  }
  ScenarioConfig cfg;
  read_into(j, "name", cfg.name);
  read_into(j, "seed", cfg.seed);
  read_into(j, "timeout_s", cfg.timeout_s);

  if (j.contains("robot")) {
    const json& r = j.at("robot");
    if (r.contains("start")) {
      const auto s = r.at("start").get<std::vector<double>>();
      if (s.size() != 3) throw std::invalid_argument("scenario field 'robot.start': need [x, y, theta]");
      cfg.start = RobotState{s[0], s[1], s[2]};
    }
    if (r.contains("goal")) {
      const auto g = r.at("goal").get<std::vector<double>>();
      if (g.size() != 2) throw std::invalid_argument("scenario field 'robot.goal': need [x, y]");
      cfg.goal_x = g[0];
      cfg.goal_y = g[1];
    }
    read_into(r, "goal_tolerance", cfg.goal_tolerance);
    read_into(r, "radius", cfg.robot_radius);
    read_into(r, "height", cfg.robot_height);
  }

  if (j.contains("world")) {
    const json& w = j.at("world");
    if (w.contains("bounds")) {
      const auto b = w.at("bounds").get<std::vector<std::vector<double>>>();
      if (b.size() != 2 || b[0].size() != 2 || b[1].size() != 2) {
        throw std::invalid_argument("scenario field 'world.bounds': need [[x0,y0],[x1,y1]]");
      }
      cfg.bounds_min_x = b[0][0];
      cfg.bounds_min_y = b[0][1];
      cfg.bounds_max_x = b[1][0];
      cfg.bounds_max_y = b[1][1];
    }
    if (w.contains("boxes")) {
      for (const json& bj : w.at("boxes")) cfg.boxes.push_back(parse_box(bj));
    }
    if (w.contains("tables")) {
      for (const json& tj : w.at("tables")) {
        TableBody t;
        const auto c = tj.at("center").get<std::vector<double>>();
        t.cx = c.at(0);
        t.cy = c.at(1);
        if (tj.contains("size")) {
          const auto s = tj.at("size").get<std::vector<double>>();
          t.size_x = s.at(0);
          t.size_y = s.at(1);
        }
        if (tj.contains("top_z")) {
          const auto z = tj.at("top_z").get<std::vector<double>>();
          t.top_z_min = z.at(0);
          t.top_z_max = z.at(1);
        }
        read_into(tj, "leg_size", t.leg_size);
        cfg.tables.push_back(t);
      }
    }
    if (w.contains("blackboards")) {
      for (const json& bj : w.at("blackboards")) {
        BlackboardBody b;
        const auto c = bj.at("center").get<std::vector<double>>();
        b.cx = c.at(0);
        b.cy = c.at(1);
        read_into(bj, "width", b.width);
        read_into(bj, "depth", b.depth);
        if (bj.contains("slab_z")) {
          const auto z = bj.at("slab_z").get<std::vector<double>>();
          b.slab_z_min = z.at(0);
          b.slab_z_max = z.at(1);
        }
        read_into(bj, "leg_size", b.leg_size);
        cfg.blackboards.push_back(b);
      }
    }
    if (w.contains("pedestrians")) {
      for (const json& pj : w.at("pedestrians")) {
        Pedestrian ped;
        read_into(pj, "radius", ped.radius);
        read_into(pj, "height", ped.height);
        read_into(pj, "speed", ped.speed);
        read_into(pj, "loop", ped.loop);
        read_into(pj, "start_offset", ped.arc_pos);
        for (const json& wj : pj.at("waypoints")) {
          const auto wp = wj.get<std::vector<double>>();
          if (wp.size() != 2) {
            throw std::invalid_argument("scenario field 'pedestrians.waypoints': need [x, y] pairs");
          }
          ped.waypoints.emplace_back(wp[0], wp[1]);
        }
        cfg.pedestrians.push_back(std::move(ped));
      }
    }
  }

  if (j.contains("sensor")) {
    const json& s = j.at("sensor");
    double hfov_deg = -1, vfov_deg = -1;
    read_into(s, "hfov_deg", hfov_deg);
    read_into(s, "vfov_deg", vfov_deg);
    if (hfov_deg > 0) cfg.sensor.horizontal_fov = hfov_deg * M_PI / 180.0;
    if (vfov_deg > 0) cfg.sensor.vertical_fov = vfov_deg * M_PI / 180.0;
    read_into(s, "range", cfg.sensor.max_range);
    if (s.contains("rays")) {
      const auto r = s.at("rays").get<std::vector<int>>();
      cfg.sensor.rays_horizontal = r.at(0);
      cfg.sensor.rays_vertical = r.at(1);
    }
    read_into(s, "mount_height", cfg.sensor.mount_height);
  }

  if (j.contains("perception")) {
    const json& p = j.at("perception");
    read_into(p, "voxel_resolution", cfg.perception.voxel_resolution);
    read_into(p, "dbscan_eps", cfg.perception.dbscan_eps);
    read_into(p, "dbscan_min_pts", cfg.perception.dbscan_min_pts);
    read_into(p, "v_dyn", cfg.perception.v_dyn);
    read_into(p, "vote_fraction", cfg.perception.vote_fraction);
    read_into(p, "vote_window", cfg.perception.vote_window);
    read_into(p, "association_gate", cfg.perception.association_gate);
    read_into(p, "t_ratio", cfg.perception.t_ratio);
    read_into(p, "miss_window", cfg.perception.miss_window);
    read_into(p, "local_range", cfg.perception.local_range);
    read_into(p, "noise_sigma", cfg.sensor_noise_sigma);
  }

  if (j.contains("tracking")) {
    const json& t = j.at("tracking");
    read_into(t, "sigma_accel", cfg.tracking.sigma_accel);
    read_into(t, "sigma_meas", cfg.tracking.sigma_meas);
    read_into(t, "association_gate", cfg.tracking.association_gate);
  }

  if (j.contains("nmpc")) {
    const json& n = j.at("nmpc");
    read_into(n, "horizon", cfg.nmpc.horizon);
    read_into(n, "dt", cfg.nmpc.dt);
    read_into(n, "gamma", cfg.nmpc.gamma);
    read_into(n, "delta_s", cfg.nmpc.delta_s);
    read_into(n, "delta_d", cfg.nmpc.delta_d);
    read_into(n, "v_min", cfg.nmpc.v_min);
    read_into(n, "v_max", cfg.nmpc.v_max);
    read_into(n, "omega_max", cfg.nmpc.omega_max);
    read_into(n, "terminal_radius", cfg.nmpc.terminal_radius);
    read_into(n, "max_sqp_iterations", cfg.nmpc.max_sqp_iterations);
    auto read_vec3 = [&](const char* key, Eigen::Vector3d& out) {
      if (n.contains(key)) {
        const auto v = n.at(key).get<std::vector<double>>();
        if (v.size() != 3) throw std::invalid_argument(std::string("scenario field 'nmpc.") + key + "': need 3 values");
        out = Eigen::Vector3d{v[0], v[1], v[2]};
      }
    };
    read_vec3("q", cfg.nmpc.q_weights);
    read_vec3("w", cfg.nmpc.w_weights);
    if (n.contains("r")) {
      const auto v = n.at("r").get<std::vector<double>>();
      if (v.size() != 2) throw std::invalid_argument("scenario field 'nmpc.r': need 2 values");
      cfg.nmpc.r_weights = Eigen::Vector2d{v[0], v[1]};
    }
    read_into(n, "terminal_weight_scale", cfg.nmpc.terminal_weight_scale);
  }

  if (j.contains("risk")) {
    const json& r = j.at("risk");
    std::size_t cap = cfg.risk.history_capacity;
    read_into(r, "history_capacity", cap);
    cfg.risk.history_capacity = cap;
    read_into(r, "merge_radius", cfg.risk.merge_radius);
    read_into(r, "history_range", cfg.risk.history_range);
    read_into(r, "history_max_age", cfg.risk.history_max_age);
  }

  if (j.contains("planner")) {
    cfg.planner = planner_from_name(j.at("planner").get<std::string>());
  }
  read_into(j, "physics_dt", cfg.physics_dt);
  read_into(j, "perception_every", cfg.perception_every);
  read_into(j, "planning_every", cfg.planning_every);

  // The robot's collision band follows its geometry unless overridden.
  cfg.nmpc.band = HeightBand{0.05, cfg.robot_height};

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_json(ss.str());
}

SuiteConfig load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open suite file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("suite parse error: ") + e.what());
  }
  SuiteConfig suite;
  if (j.contains("scenarios")) {
    for (const json& s : j.at("scenarios")) {
      suite.scenario_paths.push_back(s.get<std::string>());
    }
  }
  if (j.contains("planners")) {
    for (const json& p : j.at("planners")) {
      suite.planners.push_back(planner_from_name(p.get<std::string>()));
    }
  } else {
    suite.planners = {PlannerKind::kOurs};
  }
  if (suite.scenario_paths.empty()) {
    throw std::invalid_argument("suite file lists no scenarios");
  }
  return suite;
}

}  // namespace ftdnav
