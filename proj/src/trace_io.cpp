#include "ftdnav/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ftdnav {

using nlohmann::json;

namespace {

const char* kColumns =
    "time_s,x_m,y_m,theta_rad,v_cmd_mps,omega_cmd_radps,solver_status,"
    "min_obstacle_dist_m,static_risk_count,dynamic_risk_count";

double parse_double(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{}) {
    throw std::invalid_argument("trace: bad number '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream out;
  out << "# ftdnav-trace-v1\n";
  out << "# scenario=" << trace.scenario_name << "\n";
  out << "# planner=" << trace.planner << "\n";
  out << "# seed=" << trace.seed << "\n";
  out << "# goal_x=" << format_double(trace.goal_x) << "\n";
  out << "# goal_y=" << format_double(trace.goal_y) << "\n";
  out << "# goal_tolerance=" << format_double(trace.goal_tolerance) << "\n";
  out << "# robot_radius=" << format_double(trace.robot_radius) << "\n";
  out << "# robot_height=" << format_double(trace.robot_height) << "\n";
  out << "# outcome=" << outcome_name(trace.outcome) << "\n";
  out << "# end_time=" << format_double(trace.end_time) << "\n";
  out << kColumns << "\n";
  for (const TraceRow& r : trace.rows) {
    out << format_double(r.time) << ',' << format_double(r.x) << ','
        << format_double(r.y) << ',' << format_double(r.theta) << ','
        << format_double(r.v_cmd) << ',' << format_double(r.omega_cmd) << ','
        << r.solver_status << ',' << format_double(r.min_obstacle_dist) << ','
        << r.static_risk_count << ',' << r.dynamic_risk_count << "\n";
  }
  return out.str();
}

SimTrace trace_from_csv(const std::string& text) {
  SimTrace trace;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "scenario") trace.scenario_name = value;
      else if (key == "planner") trace.planner = value;
      else if (key == "seed") trace.seed = static_cast<unsigned>(std::stoul(value));
      else if (key == "goal_x") trace.goal_x = parse_double(value);
      else if (key == "goal_y") trace.goal_y = parse_double(value);
      else if (key == "goal_tolerance") trace.goal_tolerance = parse_double(value);
      else if (key == "robot_radius") trace.robot_radius = parse_double(value);
      else if (key == "robot_height") trace.robot_height = parse_double(value);
      else if (key == "end_time") trace.end_time = parse_double(value);
      else if (key == "outcome") {
        if (value == "success") trace.outcome = Outcome::kSuccess;
        else if (value == "collision") trace.outcome = Outcome::kCollision;
        else if (value == "timeout") trace.outcome = Outcome::kTimeout;
        else throw std::invalid_argument("trace: unknown outcome '" + value + "'");
      }
      continue;
    }
    if (!header_seen) {
      if (line != kColumns) {
        throw std::invalid_argument("trace: unexpected column header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view view = line;
    while (true) {
      const auto comma = view.find(',');
      fields.push_back(view.substr(0, comma));
      if (comma == std::string_view::npos) break;
      view.remove_prefix(comma + 1);
    }
    if (fields.size() != 10) {
      throw std::invalid_argument("trace: expected 10 columns");
    }
    TraceRow r;
    r.time = parse_double(fields[0]);
    r.x = parse_double(fields[1]);
    r.y = parse_double(fields[2]);
    r.theta = parse_double(fields[3]);
    r.v_cmd = parse_double(fields[4]);
    r.omega_cmd = parse_double(fields[5]);
    r.solver_status = static_cast<int>(parse_double(fields[6]));
    r.min_obstacle_dist = parse_double(fields[7]);
    r.static_risk_count = static_cast<int>(parse_double(fields[8]));
    r.dynamic_risk_count = static_cast<int>(parse_double(fields[9]));
    trace.rows.push_back(r);
  }
  if (!header_seen) throw std::invalid_argument("trace: no column header found");
  return trace;
}

void write_trace_csv(const SimTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out << trace_to_csv(trace);
}

SimTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return trace_from_csv(ss.str());
}

namespace {

json metrics_to_json_obj(const Metrics& m) {
  json j;
  j["mu_d"] = std::isinf(m.mu_d) ? json(nullptr) : json(m.mu_d);
  j["path_length"] = m.path_length;
  j["smoothness"] = m.smoothness;
  j["mu_t"] = m.mu_t.has_value() ? json(*m.mu_t) : json(nullptr);
  j["success"] = m.success;
  j["collision"] = m.collision;
  j["solve_time_mean"] = m.solve_time_mean;
  j["solve_time_max"] = m.solve_time_max;
  return j;
}

Metrics metrics_from_json_obj(const json& j) {
  Metrics m;
  if (!j.at("mu_d").is_null()) m.mu_d = j.at("mu_d").get<double>();
  else m.mu_d = std::numeric_limits<double>::infinity();
  m.path_length = j.at("path_length").get<double>();
  m.smoothness = j.at("smoothness").get<double>();
  if (!j.at("mu_t").is_null()) m.mu_t = j.at("mu_t").get<double>();
  m.success = j.at("success").get<bool>();
  m.collision = j.at("collision").get<bool>();
  m.solve_time_mean = j.value("solve_time_mean", 0.0);
  m.solve_time_max = j.value("solve_time_max", 0.0);
  return m;
}

}  // namespace

std::string metrics_to_json(const Metrics& metrics) {
  return metrics_to_json_obj(metrics).dump(2) + "\n";
}

Metrics metrics_from_json(const std::string& text) {
  return metrics_from_json_obj(json::parse(text));
}

void write_metrics_json(const Metrics& metrics, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  out << metrics_to_json(metrics);
}

ComparisonReport build_comparison(const std::vector<ComparisonEntry>& runs) {
  ComparisonReport report;
  report.entries = runs;

  std::map<std::string, const ComparisonEntry*> ours_by_scenario;
  for (const ComparisonEntry& e : runs) {
    if (e.planner == "ours") ours_by_scenario[e.scenario] = &e;
  }
  for (ComparisonEntry& e : report.entries) {
    const auto it = ours_by_scenario.find(e.scenario);
    if (it == ours_by_scenario.end()) continue;
    const Metrics& ours = it->second->metrics;
    if (e.metrics.success && ours.success && ours.path_length > 0.0) {
      e.rel_path_length = e.metrics.path_length / ours.path_length;
      if (ours.smoothness > 0.0) {
        e.rel_smoothness = e.metrics.smoothness / ours.smoothness;
      }
    }
  }

  std::map<std::string, std::pair<int, int>> tally;  // planner -> (success, total)
  for (const ComparisonEntry& e : runs) {
    auto& [ok, total] = tally[e.planner];
    total += 1;
    if (e.metrics.success) ok += 1;
  }
  for (const auto& [planner, counts] : tally) {
    report.success_rates.emplace_back(
        planner, static_cast<double>(counts.first) / counts.second);
  }
  return report;
}

std::string comparison_to_json(const ComparisonReport& report) {
  json j;
  j["runs"] = json::array();
  for (const ComparisonEntry& e : report.entries) {
    json r;
    r["scenario"] = e.scenario;
    r["planner"] = e.planner;
    r["metrics"] = metrics_to_json_obj(e.metrics);
    r["rel_path_length"] =
        e.rel_path_length.has_value() ? json(*e.rel_path_length) : json(nullptr);
    r["rel_smoothness"] =
        e.rel_smoothness.has_value() ? json(*e.rel_smoothness) : json(nullptr);
    j["runs"].push_back(r);
  }
  j["success_rate"] = json::object();
  for (const auto& [planner, rate] : report.success_rates) {
    j["success_rate"][planner] = rate;
  }
  return j.dump(2) + "\n";
}

void write_comparison_json(const ComparisonReport& report,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write comparison file: " + path);
  out << comparison_to_json(report);
}

}  // namespace ftdnav
