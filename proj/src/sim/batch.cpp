#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <random>
#include <thread>

#include "hclbf/sim.hpp"

namespace hclbf::sim {

RunSummary run_and_check(const Scenario& sc) {
  RunSummary r;
  r.seed = sc.seed;
  try {
    const CompiledScenario compiled = compile(sc);
    const Trajectory traj = run(sc, compiled);
    r.outcome = traj.outcome;
    r.steps = traj.steps.size();
    r.projections = traj.count(filter::kProjected);
    r.safe = check_safety(traj, compiled.schedule).safe;
    r.always_satisfied = !sc.formula || always_conjuncts_hold(*sc.formula, to_signal(traj, sc.horizon));
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

BatchSummary batch(std::span<const Scenario> scenarios, unsigned threads) {
  BatchSummary summary;
  summary.n = scenarios.size();
  summary.runs.resize(scenarios.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, scenarios.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < scenarios.size(); k = next++) summary.runs[k] = run_and_check(scenarios[k]);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  double steps = 0.0;
  double projections = 0.0;
  for (const auto& r : summary.runs) {
    if (!r.ok) {
      ++summary.error_count;
      continue;
    }
    summary.safe_count += r.safe ? 1 : 0;
    summary.reach_count += r.outcome == Outcome::ReachedGoal ? 1 : 0;
    steps += static_cast<double>(r.steps);
    projections += static_cast<double>(r.projections);
  }
  const std::size_t ok = summary.n - summary.error_count;
  if (ok > 0) {
    summary.mean_steps = steps / static_cast<double>(ok);
    summary.mean_projections = projections / static_cast<double>(ok);
  }
  return summary;
}

namespace {

int draw_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(policy::uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

struct CellBox {
  int i0, j0, i1, j1;  // inclusive

  bool overlaps(const CellBox& o, int pad) const {
    return i0 - pad <= o.i1 && o.i0 <= i1 + pad && j0 - pad <= o.j1 && o.j0 <= j1 + pad;
  }
};

std::string keep_inside_formula(double lo, double hi, double horizon) {
  const stl::Atom x_lo{stl::Axis::X, stl::Relation::GE, lo};
  const stl::Atom x_hi{stl::Axis::X, stl::Relation::GT, hi};
  const stl::Atom y_lo{stl::Axis::Y, stl::Relation::GE, lo};
  const stl::Atom y_hi{stl::Axis::Y, stl::Relation::GT, hi};
  stl::TemporalConjunct c{stl::TemporalOp::Always, 0.0, horizon, {{x_lo, false}, {x_hi, true}, {y_lo, false}, {y_hi, true}}};
  return stl::pretty_print(stl::Formula{{c}});
}

}  // namespace

Scenario random_scenario(std::uint64_t seed, const RandomScenarioConfig& config) {
  std::mt19937_64 rng(seed);
  const int n = config.grid;
  const double cell = config.cell;
  const int m = config.margin_cells;
  const double extent = cell * (n - 1);

  Scenario sc;
  sc.seed = seed;
  sc.horizon = config.horizon;
  sc.dt = config.dt;
  sc.filter = config.filter;
  sc.world.x_min = 0.0;
  sc.world.x_max = extent;
  sc.world.y_min = 0.0;
  sc.world.y_max = extent;
  sc.world.width = n;
  sc.world.height = n;

  // Safe cells are i in [m, n-1-m]. Thresholds sit on cell edges so that a
  // point in a safe cell always satisfies the Always body.
  const double lo = (m - 0.5) * cell;
  const double hi = (n - 1 - m + 0.5) * cell;

  const int gw = draw_int(rng, 2, 4);
  const int gh = draw_int(rng, 2, 4);
  const int gi = draw_int(rng, m + 1, n - 2 - m - gw);
  const int gj = draw_int(rng, m + 1, n - 2 - m - gh);
  const CellBox goal{gi, gj, gi + gw - 1, gj + gh - 1};
  const Eigen::Vector2d goal_center(0.5 * (goal.i0 + goal.i1) * cell, 0.5 * (goal.j0 + goal.j1) * cell);

  const double target = config.coverage_min + (config.coverage_max - config.coverage_min) * policy::uniform01(rng);
  std::vector<bool> blocked(static_cast<std::size_t>(n) * n, false);
  std::size_t covered = 0;
  const auto total = static_cast<double>(blocked.size());
  for (int attempt = 0; attempt < 2000 && covered < target * total; ++attempt) {
    const int w = draw_int(rng, 2, 8);
    const int h = draw_int(rng, 2, 8);
    const CellBox box{draw_int(rng, 1, n - 1 - w), draw_int(rng, 1, n - 1 - h), 0, 0};
    const CellBox r{box.i0, box.j0, box.i0 + w - 1, box.j0 + h - 1};
    if (r.overlaps(goal, 1)) continue;
    std::size_t added = 0;
    for (int j = r.j0; j <= r.j1; ++j)
      for (int i = r.i0; i <= r.i1; ++i) added += blocked[static_cast<std::size_t>(j) * n + i] ? 0 : 1;
    if (static_cast<double>(covered + added) > config.coverage_max * total) continue;
    for (int j = r.j0; j <= r.j1; ++j)
      for (int i = r.i0; i <= r.i1; ++i) blocked[static_cast<std::size_t>(j) * n + i] = true;
    covered += added;
    sc.world.static_obstacles.push_back({r.i0 * cell, r.j0 * cell, r.i1 * cell, r.j1 * cell});
  }

  std::string text = keep_inside_formula(lo, hi, config.horizon);
  if (seed % 4 < 2) {
    sc.world.static_goal = field::Rect{goal.i0 * cell, goal.j0 * cell, goal.i1 * cell, goal.j1 * cell};
  } else {
    const stl::Atom gx_lo{stl::Axis::X, stl::Relation::GE, (goal.i0 - 0.5) * cell};
    const stl::Atom gx_hi{stl::Axis::X, stl::Relation::GT, (goal.i1 + 0.5) * cell};
    const stl::Atom gy_lo{stl::Axis::Y, stl::Relation::GE, (goal.j0 - 0.5) * cell};
    const stl::Atom gy_hi{stl::Axis::Y, stl::Relation::GT, (goal.j1 + 0.5) * cell};
    stl::TemporalConjunct c{stl::TemporalOp::Eventually, 0.0, config.horizon,
                            {{gx_lo, false}, {gx_hi, true}, {gy_lo, false}, {gy_hi, true}}};
    text += " & " + stl::pretty_print(stl::Formula{{c}});
  }
  sc.formula = stl::parse(text);

  // Start: a Free cell connected to the goal inside the safe sublevel set,
  // preferring ones at least 8 cells away.
  const auto schedule = field::compile_schedule(sc.formula, sc.world, sc.horizon);
  const auto& occ = schedule.epochs.front().occupancy;
  const field::PotentialField fld = field::solve(occ, sc.solver);
  const double level = safe_sublevel_bound(fld) - config.start_margin;
  std::vector<int> dist(occ.cells().size(), -1);
  std::deque<std::size_t> queue;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    if (occ.cells()[k] == field::CellState::Goal) {
      dist[k] = 0;
      queue.push_back(k);
    }
  }
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    const int i = static_cast<int>(k % n);
    const int j = static_cast<int>(k / n);
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int a = i + di[d];
      const int b = j + dj[d];
      if (a < 0 || b < 0 || a >= n || b >= n) continue;
      const std::size_t nk = occ.index(a, b);
      if (dist[nk] >= 0 || occ.cells()[nk] == field::CellState::Unsafe) continue;
      dist[nk] = dist[k] + 1;
      queue.push_back(nk);
    }
  }
  std::vector<std::size_t> far, near;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    if (occ.cells()[k] != field::CellState::Free || dist[k] < 0 || fld.values()[k] > level) continue;
    (dist[k] >= 8 ? far : near).push_back(k);
  }
  const auto& pool = far.empty() ? near : far;
  if (pool.empty()) throw std::runtime_error("random scenario has no start inside the safe sublevel set");
  const std::size_t start = pool[policy::uniform_index(rng, pool.size())];
  const Eigen::Vector2d center = occ.transform().cell_center(static_cast<int>(start % n), static_cast<int>(start / n));
  sc.start = center;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const Eigen::Vector2d jitter((policy::uniform01(rng) - 0.5) * 0.5 * cell, (policy::uniform01(rng) - 0.5) * 0.5 * cell);
    if (field::sample(fld, center.x() + jitter.x(), center.y() + jitter.y()).V <= level) {
      sc.start = center + jitter;
      break;
    }
  }

  sc.policy.goal = goal_center;
  if (seed % 2 == 0) {
    sc.policy.kind = PolicyKind::Adversarial;
  } else {
    sc.policy.kind = PolicyKind::GoalSeek;
    sc.policy.noise = config.noise;
  }
  return sc;
}

}  // namespace hclbf::sim
