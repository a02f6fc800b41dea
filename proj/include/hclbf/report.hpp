#pragma once

#include <string>
#include <vector>

#include "hclbf/sim.hpp"
#include "hclbf/stl.hpp"

namespace hclbf::io {

std::string monitor_json(const stl::Formula& f, const stl::MonitorVerdict& v);

/// Outcome, flag counts, safety check, barrier audit, per-epoch solve stats and
/// (when the scenario has a formula) the monitor verdict on the held signal.
std::string run_summary_json(const sim::Scenario& sc, const sim::CompiledScenario& compiled,
                             const sim::Trajectory& traj);

std::string batch_summary_json(const sim::BatchSummary& s);

}  // namespace hclbf::io
