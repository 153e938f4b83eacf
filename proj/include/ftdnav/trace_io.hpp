#pragma once

#include <string>
#include <vector>

#include "ftdnav/simulator.hpp"

namespace ftdnav {

/// Shortest round-trip decimal representation of a double ("inf" allowed).
std::string format_double(double value);

/// trace.csv: '#'-prefixed metadata lines, a header row, then one row per
/// physics tick in the declared column order. Doubles round-trip exactly,
/// so re-reading reproduces the trace bit for bit.
std::string trace_to_csv(const SimTrace& trace);
SimTrace trace_from_csv(const std::string& text);

void write_trace_csv(const SimTrace& trace, const std::string& path);
SimTrace read_trace_csv(const std::string& path);

/// metrics.json: one object with the metric field names.
std::string metrics_to_json(const Metrics& metrics);
Metrics metrics_from_json(const std::string& text);
void write_metrics_json(const Metrics& metrics, const std::string& path);

/// One suite run entry for comparison.json.
struct ComparisonEntry {
  std::string scenario;
  std::string planner;
  Metrics metrics;
  // Relative to the "ours" run of the same scenario; absent when either
  // side failed.
  std::optional<double> rel_path_length;
  std::optional<double> rel_smoothness;
};

struct ComparisonReport {
  std::vector<ComparisonEntry> entries;
  std::vector<std::pair<std::string, double>> success_rates;  // per planner
};

/// Fills in the relative columns (normalized to the "ours" planner per
/// scenario) and per-planner success rates.
ComparisonReport build_comparison(const std::vector<ComparisonEntry>& runs);

std::string comparison_to_json(const ComparisonReport& report);
void write_comparison_json(const ComparisonReport& report, const std::string& path);

}  // namespace ftdnav
