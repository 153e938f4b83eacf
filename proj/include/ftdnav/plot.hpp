#pragma once

#include <optional>
#include <string>

#include "ftdnav/scenario.hpp"
#include "ftdnav/simulator.hpp"

namespace ftdnav {

/// Renders the trajectory as a static SVG. World geometry (box footprints,
/// pedestrian paths) is drawn when a scenario is supplied; byte-identical
/// output for identical inputs.
std::string render_trace_svg(const SimTrace& trace,
                             const ScenarioConfig* scenario);

void write_trace_svg(const SimTrace& trace, const ScenarioConfig* scenario,
                     const std::string& path);

}  // namespace ftdnav
