#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ftdnav/plot.hpp"
#include "ftdnav/scenario.hpp"
#include "ftdnav/simulator.hpp"
#include "ftdnav/trace_io.hpp"

namespace fs = std::filesystem;
using namespace ftdnav;

namespace {

// Exit codes separate tool errors from navigation outcomes: a run that ends
// in a collision or timeout still exits 0, since that is data.
constexpr int kOk = 0;
constexpr int kToolError = 1;

struct RunOptions {
  std::string scenario_path;
  std::string planner;
  std::string out_dir{"."};
  int64_t seed{-1};
  bool headless{true};
};

int cmd_run(const RunOptions& opt) {
  ScenarioConfig cfg = load_scenario(opt.scenario_path);
  if (!opt.planner.empty()) cfg.planner = planner_from_name(opt.planner);
  if (opt.seed >= 0) cfg.seed = static_cast<unsigned>(opt.seed);

  fs::create_directories(opt.out_dir);
  const RunResult result = run_scenario(cfg);

  write_trace_csv(result.trace, (fs::path(opt.out_dir) / "trace.csv").string());
  write_metrics_json(result.metrics,
                     (fs::path(opt.out_dir) / "metrics.json").string());

  std::cout << cfg.name << " [" << planner_name(cfg.planner)
            << "]: " << outcome_name(result.trace.outcome)
            << "  path=" << format_double(result.metrics.path_length)
            << "m  mu_d=" << format_double(result.metrics.mu_d)
            << "m  cycles=" << result.planning_cycles
            << "  failures=" << result.solver_failures << "\n";
  return kOk;
}

int cmd_suite(const std::string& suite_path, const std::string& out_dir) {
  const SuiteConfig suite = load_suite(suite_path);
  const fs::path suite_dir = fs::path(suite_path).parent_path();
  fs::create_directories(out_dir);

  std::vector<ComparisonEntry> entries;
  for (const std::string& rel : suite.scenario_paths) {
    const fs::path scenario_path =
        fs::path(rel).is_absolute() ? fs::path(rel) : suite_dir / rel;
    for (const PlannerKind planner : suite.planners) {
      ScenarioConfig cfg = load_scenario(scenario_path.string());
      cfg.planner = planner;
      const RunResult result = run_scenario(cfg);

      const std::string run_name = cfg.name + "_" + planner_name(planner);
      const fs::path run_dir = fs::path(out_dir) / run_name;
      fs::create_directories(run_dir);
      write_trace_csv(result.trace, (run_dir / "trace.csv").string());
      write_metrics_json(result.metrics, (run_dir / "metrics.json").string());

      entries.push_back(ComparisonEntry{cfg.name, planner_name(planner),
                                        result.metrics, std::nullopt,
                                        std::nullopt});
      std::cout << run_name << ": " << outcome_name(result.trace.outcome)
                << "\n";
    }
  }
  const ComparisonReport report = build_comparison(entries);
  write_comparison_json(report,
                        (fs::path(out_dir) / "comparison.json").string());
  std::cout << "wrote " << (fs::path(out_dir) / "comparison.json").string()
            << " (" << report.entries.size() << " runs)\n";
  return kOk;
}

int cmd_plot(const std::string& trace_path, const std::string& scenario_path,
             const std::string& out_path) {
  const SimTrace trace = read_trace_csv(trace_path);
  if (!scenario_path.empty()) {
    const ScenarioConfig cfg = load_scenario(scenario_path);
    write_trace_svg(trace, &cfg, out_path);
  } else {
    write_trace_svg(trace, nullptr, out_path);
  }
  std::cout << "wrote " << out_path << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ftdnav: point-cloud barrier NMPC navigation simulator"};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("--scenario", run_opt.scenario_path, "Scenario JSON file")
      ->required();
  run->add_option("--planner", run_opt.planner,
                  "Planner id: ours | dcbf-ellipsoid | depth-cbf-qp");
  run->add_option("--out", run_opt.out_dir, "Output directory");
  run->add_option("--seed", run_opt.seed, "Seed override");
  run->add_flag("--headless", run_opt.headless, "Headless mode (always on)");

  std::string suite_path, suite_out{"."};
  CLI::App* suite = app.add_subcommand("suite", "Run a scenario x planner suite");
  suite->add_option("--suite", suite_path, "Suite JSON file")->required();
  suite->add_option("--out", suite_out, "Output directory");

  std::string trace_path, plot_scenario, plot_out{"plot.svg"};
  CLI::App* plot = app.add_subcommand("plot", "Render a trace to SVG");
  plot->add_option("--trace", trace_path, "trace.csv input")->required();
  plot->add_option("--scenario", plot_scenario,
                   "Scenario JSON for world geometry (optional)");
  plot->add_option("--out", plot_out, "Output SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opt);
    if (suite->parsed()) return cmd_suite(suite_path, suite_out);
    if (plot->parsed()) return cmd_plot(trace_path, plot_scenario, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kToolError;
  }
  return kToolError;
}
