#include "ftdnav/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ftdnav {

namespace {

// Fixed-precision formatting keeps the SVG deterministic and compact.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string render_trace_svg(const SimTrace& trace,
                             const ScenarioConfig* scenario) {
  double min_x = trace.goal_x, max_x = trace.goal_x;
  double min_y = trace.goal_y, max_y = trace.goal_y;
  for (const TraceRow& r : trace.rows) {
    min_x = std::min(min_x, r.x);
    max_x = std::max(max_x, r.x);
    min_y = std::min(min_y, r.y);
    max_y = std::max(max_y, r.y);
  }
  WorldModel world;
  if (scenario) {
    world = scenario->make_world();
    min_x = std::min(min_x, world.bounds_min_x);
    max_x = std::max(max_x, world.bounds_max_x);
    min_y = std::min(min_y, world.bounds_min_y);
    max_y = std::max(max_y, world.bounds_max_y);
  }
  const double pad = 0.5;
  min_x -= pad; min_y -= pad; max_x += pad; max_y += pad;

  const double scale = 60.0;  // px per meter
  const double width = (max_x - min_x) * scale;
  const double height = (max_y - min_y) * scale;
  auto sx = [&](double x) { return (x - min_x) * scale; };
  auto sy = [&](double y) { return height - (y - min_y) * scale; };  // y up

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width)
      << " " << fmt(height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  if (scenario) {
    for (const Box& b : world.boxes) {
      // Overhead slabs (fully above the robot) draw lighter.
      const bool overhead = b.min.z >= trace.robot_height;
      svg << "<rect x=\"" << fmt(sx(b.min.x)) << "\" y=\"" << fmt(sy(b.max.y))
          << "\" width=\"" << fmt((b.max.x - b.min.x) * scale) << "\" height=\""
          << fmt((b.max.y - b.min.y) * scale) << "\" fill=\""
          << (overhead ? "#c9d7f0" : "#7d8ca3") << "\" stroke=\"#44506a\" "
          << "stroke-width=\"1\" fill-opacity=\"" << (overhead ? "0.5" : "0.9")
          << "\"/>\n";
    }
    for (const Pedestrian& ped : world.pedestrians) {
      if (ped.waypoints.size() > 1) {
        svg << "<polyline fill=\"none\" stroke=\"#c97b2d\" stroke-width=\"1.5\" "
            << "stroke-dasharray=\"6,4\" points=\"";
        for (const auto& [wx, wy] : ped.waypoints) {
          svg << fmt(sx(wx)) << "," << fmt(sy(wy)) << " ";
        }
        svg << "\"/>\n";
      }
      const auto [px, py] = ped.position();
      svg << "<circle cx=\"" << fmt(sx(px)) << "\" cy=\"" << fmt(sy(py))
          << "\" r=\"" << fmt(ped.radius * scale)
          << "\" fill=\"#e8a45c\" fill-opacity=\"0.6\" stroke=\"#c97b2d\"/>\n";
    }
  }

  // Trajectory.
  if (trace.rows.size() >= 2) {
    svg << "<polyline fill=\"none\" stroke=\"#1f8a4c\" stroke-width=\"2.5\" points=\"";
    for (const TraceRow& r : trace.rows) {
      svg << fmt(sx(r.x)) << "," << fmt(sy(r.y)) << " ";
    }
    svg << "\"/>\n";
  }

  // Ticks where risk constraints were active.
  for (const TraceRow& r : trace.rows) {
    if (r.dynamic_risk_count > 0) {
      svg << "<circle cx=\"" << fmt(sx(r.x)) << "\" cy=\"" << fmt(sy(r.y))
          << "\" r=\"2\" fill=\"#8c4ae8\" fill-opacity=\"0.35\"/>\n";
    } else if (r.static_risk_count > 0) {
      svg << "<circle cx=\"" << fmt(sx(r.x)) << "\" cy=\"" << fmt(sy(r.y))
          << "\" r=\"1.5\" fill=\"#2d6bc9\" fill-opacity=\"0.25\"/>\n";
    }
  }

  // Start and goal markers (a stationary robot still shows as a point).
  if (!trace.rows.empty()) {
    const TraceRow& s = trace.rows.front();
    svg << "<circle cx=\"" << fmt(sx(s.x)) << "\" cy=\"" << fmt(sy(s.y))
        << "\" r=\"5\" fill=\"#1f8a4c\"/>\n";
  }
  svg << "<circle cx=\"" << fmt(sx(trace.goal_x)) << "\" cy=\""
      << fmt(sy(trace.goal_y)) << "\" r=\"" << fmt(trace.goal_tolerance * scale)
      << "\" fill=\"none\" stroke=\"#d43d3d\" stroke-width=\"2\"/>\n";
  svg << "<text x=\"8\" y=\"16\" font-family=\"monospace\" font-size=\"12\">"
      << trace.scenario_name << " / " << trace.planner << " / "
      << outcome_name(trace.outcome) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_trace_svg(const SimTrace& trace, const ScenarioConfig* scenario,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write plot file: " + path);
  out << render_trace_svg(trace, scenario);
}

}  // namespace ftdnav
