#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hclbf/field.hpp"
#include "hclbf/filter.hpp"
#include "hclbf/policy.hpp"
#include "hclbf/stl.hpp"

namespace hclbf::sim {

enum class PolicyKind { GoalSeek, Adversarial, QTable, Replay };

std::string to_string(PolicyKind k);
PolicyKind policy_kind_from_string(const std::string& s);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::GoalSeek;
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  double gain = 1.0;
  double noise = 0.0;  // probability of a random force per tick (goal_seek only)
  std::optional<policy::QTable> table;
  std::vector<Eigen::Vector2d> replay;
};

struct Scenario {
  field::WorldSpec world;
  std::optional<stl::Formula> formula;
  double horizon = 20.0;
  double dt = 0.05;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  PolicyConfig policy;
  filter::FilterParams filter;
  bool filter_enabled = true;
  field::SolverParams solver;
  std::uint64_t seed = 0;
  int stop_after_flat_ticks = 10;

  /// Throws std::invalid_argument when the timing or parameters are inconsistent.
  void validate() const;
  std::size_t tick_count() const;
};

class StartInCollision : public std::runtime_error {
 public:
  explicit StartInCollision(Eigen::Vector2d start);
};

enum class Outcome { ReachedGoal, HorizonExpired, Stopped };
std::string to_string(Outcome o);

struct Step {
  double t = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d nominal_force = Eigen::Vector2d::Zero();
  filter::FilterDecision decision;
  Eigen::Vector2d next_position = Eigen::Vector2d::Zero();
  std::size_t epoch = 0;
};

struct Trajectory {
  double dt = 0.0;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  std::vector<Step> steps;
  Outcome outcome = Outcome::HorizonExpired;

  Eigen::Vector2d final_position() const { return steps.empty() ? start : steps.back().next_position; }
  double end_time() const { return static_cast<double>(steps.size()) * dt; }
  std::size_t count(filter::FilterFlag flag) const;
};

/// The schedule and one solved field per epoch.
struct CompiledScenario {
  field::ConstraintSchedule schedule;
  field::SolvedSchedule fields;
};

CompiledScenario compile(const Scenario& sc);

/// Five-step loop per tick: policy force, admittance, field sample, barrier
/// filter, Euler step. Throws StartInCollision if the start cell is Unsafe.
Trajectory run(const Scenario& sc, const CompiledScenario& compiled);
Trajectory run(const Scenario& sc);

// ---------------------------------------------------------------------------
// Post-hoc checks

struct SafetyViolation {
  double t = 0.0;
  int i = 0;
  int j = 0;
};

struct SafetyReport {
  bool safe = true;
  std::optional<SafetyViolation> first_violation;
};

/// Every recorded position and the three interior points of each segment
/// (quarters) must lie in a non-Unsafe cell of the step's epoch.
SafetyReport check_safety(const Trajectory& traj, const field::ConstraintSchedule& schedule);

struct AuditViolation {
  std::size_t step = 0;
  double t = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double v_now = 0.0;
  double v_next = 0.0;
};

struct AuditReport {
  double max_ratio = 0.0;
  std::vector<AuditViolation> violations;
};

/// Largest c such that the bilinear sublevel set {V < c} stays out of every
/// Unsafe cell: the minimum of V over Unsafe cell edges, attained at edge
/// midpoints (mean of two centers) or corners (mean of four).
double safe_sublevel_bound(const field::PotentialField& f);

/// Flags steps within one epoch where V_next > (1 - k_alpha dt) V_now + tol.
AuditReport barrier_decrease_audit(const Trajectory& traj, const field::SolvedSchedule& fields, double k_alpha,
                                   double tol = 1e-3);

/// Positions sampled at every tick plus the final position. If `hold_until` is
/// past the end, the final position is repeated up to it (the agent is at rest
/// after termination).
stl::Signal to_signal(const Trajectory& traj, std::optional<double> hold_until = std::nullopt);

/// Monitor verdict restricted to the Always conjuncts of `f` (true if none).
bool always_conjuncts_hold(const stl::Formula& f, const stl::Signal& s);

// ---------------------------------------------------------------------------
// Batches

struct RunSummary {
  std::uint64_t seed = 0;
  bool ok = false;  // false if compile/run threw
  std::string error;
  Outcome outcome = Outcome::HorizonExpired;
  bool safe = false;
  bool always_satisfied = false;
  std::size_t steps = 0;
  std::size_t projections = 0;
};

struct BatchSummary {
  std::size_t n = 0;
  std::size_t safe_count = 0;
  std::size_t reach_count = 0;
  std::size_t error_count = 0;
  double mean_steps = 0.0;
  double mean_projections = 0.0;
  std::vector<RunSummary> runs;
};

RunSummary run_and_check(const Scenario& sc);
BatchSummary batch(std::span<const Scenario> scenarios, unsigned threads = 0);

struct RandomScenarioConfig {
  int grid = 50;
  double cell = 1.0;  // world units per cell
  double coverage_min = 0.05;
  double coverage_max = 0.25;
  int margin_cells = 2;  // Always conjunct keeps the agent this far inside the border
  double horizon = 20.0;
  double dt = 0.05;
  filter::FilterParams filter{1.0, 2.0, 1e-9, std::nullopt};
  double noise = 0.2;
  double start_margin = 0.01;
};

/// Random rectangular obstacles, a reachable goal box (static or Eventually)
/// and an Always keep-inside conjunct. The start is a reachable Free point with
/// V(start) <= safe_sublevel_bound - start_margin. Even seeds use the
/// adversarial policy, odd seeds noisy goal_seek.
Scenario random_scenario(std::uint64_t seed, const RandomScenarioConfig& config = {});

// ---------------------------------------------------------------------------
// Trajectory files

/// CSV columns: t,x,y,fx,fy,ux_nom,uy_nom,V,gx,gy,lhs,rhs,violated,ux_out,uy_out,flags,epoch.
/// A final row carries only t, x, y and epoch for the terminal position.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

/// Reads (t, x, y) rows back as a signal source.
std::vector<stl::Sample> read_trajectory_samples(const std::filesystem::path& path);

}  // namespace hclbf::sim
