#include "hclbf/report.hpp"

#include <json.hpp>

namespace hclbf::io {

namespace {

using nlohmann::json;

json monitor_object(const stl::Formula& f, const stl::MonitorVerdict& v) {
  json per = json::array();
  for (const auto& c : v.per_conjunct) {
    const auto& conj = f.conjuncts.at(c.index);
    per.push_back({{"index", c.index},
                   {"conjunct", stl::pretty_print(stl::Formula{{conj}})},
                   {"satisfied", c.satisfied},
                   {"time", c.time ? json(*c.time) : json(nullptr)}});
  }
  return {{"satisfied", v.satisfied}, {"per_conjunct", per}};
}

}  // namespace

std::string monitor_json(const stl::Formula& f, const stl::MonitorVerdict& v) { return monitor_object(f, v).dump(2); }

std::string run_summary_json(const sim::Scenario& sc, const sim::CompiledScenario& compiled,
                             const sim::Trajectory& traj) {
  json j;
  j["seed"] = sc.seed;
  j["outcome"] = sim::to_string(traj.outcome);
  j["steps"] = traj.steps.size();
  j["end_time"] = traj.end_time();
  const Eigen::Vector2d last = traj.final_position();
  j["final_position"] = {last.x(), last.y()};
  j["filter_enabled"] = sc.filter_enabled;
  j["flags"] = {{"projected", traj.count(filter::kProjected)},
                {"flat_gradient_stop", traj.count(filter::kFlatGradientStop)},
                {"clamped", traj.count(filter::kClamped)},
                {"out_of_bounds", traj.count(filter::kOutOfBounds)}};

  const auto safety = sim::check_safety(traj, compiled.schedule);
  json s = {{"safe", safety.safe}};
  if (safety.first_violation) {
    s["first_violation"] = {{"t", safety.first_violation->t},
                            {"i", safety.first_violation->i},
                            {"j", safety.first_violation->j}};
  }
  j["safety"] = s;

  const double bound = sim::safe_sublevel_bound(compiled.fields.at(0));
  const double v0 = field::sample(compiled.fields.at(0), sc.start.x(), sc.start.y()).V;
  j["start"] = {{"position", {sc.start.x(), sc.start.y()}},
                {"V", v0},
                {"safe_sublevel_bound", bound},
                {"inside_safe_sublevel", v0 < bound}};

  const auto audit = sim::barrier_decrease_audit(traj, compiled.fields, sc.filter.k_alpha);
  j["barrier_audit"] = {{"violations", audit.violations.size()}, {"max_ratio", audit.max_ratio}};

  json epochs = json::array();
  for (std::size_t e = 0; e < compiled.schedule.epochs.size(); ++e) {
    const auto& ep = compiled.schedule.epochs[e];
    const auto& st = compiled.fields.at(e).stats();
    epochs.push_back({{"index", e},
                      {"t_start", ep.t_start},
                      {"t_end", ep.t_end},
                      {"solve_stats",
                       {{"iterations", st.iterations},
                        {"final_residual", st.final_residual},
                        {"wall_time_s", st.wall_time}}}});
  }
  j["epochs"] = epochs;

  if (sc.formula) {
    const double until = std::max(sc.horizon, sc.formula->max_time());
    j["monitor"] = monitor_object(*sc.formula, stl::monitor(*sc.formula, sim::to_signal(traj, until)));
  }
  return j.dump(2);
}

std::string batch_summary_json(const sim::BatchSummary& s) {
  json runs = json::array();
  for (const auto& r : s.runs) {
    json o = {{"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      o["outcome"] = sim::to_string(r.outcome);
      o["safe"] = r.safe;
      o["always_satisfied"] = r.always_satisfied;
      o["steps"] = r.steps;
      o["projections"] = r.projections;
    } else {
      o["error"] = r.error;
    }
    runs.push_back(o);
  }
  return json{{"n", s.n},
              {"safe_count", s.safe_count},
              {"reach_count", s.reach_count},
              {"error_count", s.error_count},
              {"mean_steps", s.mean_steps},
              {"mean_projections", s.mean_projections},
              {"runs", runs}}
      .dump(2);
}

}  // namespace hclbf::io
