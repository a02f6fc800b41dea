#include "hclbf/sim.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace hclbf::sim {

namespace {

std::string point_string(const Eigen::Vector2d& p) {
  std::ostringstream os;
  os << "(" << p.x() << ", " << p.y() << ")";
  return os.str();
}

std::unique_ptr<policy::Policy> make_policy(const Scenario& sc) {
  const PolicyConfig& pc = sc.policy;
  switch (pc.kind) {
    case PolicyKind::GoalSeek:
      return std::make_unique<policy::GoalSeekPolicy>(pc.goal, pc.gain, pc.noise, sc.seed);
    case PolicyKind::Adversarial:
      return std::make_unique<policy::AdversarialPolicy>();
    case PolicyKind::QTable:
      if (!pc.table) throw std::invalid_argument("q_table policy needs a table");
      return std::make_unique<policy::QTablePolicy>(*pc.table, field::GridTransform(sc.world), pc.goal, pc.gain);
    case PolicyKind::Replay:
      return std::make_unique<policy::ReplayPolicy>(pc.replay);
  }
  throw std::invalid_argument("unknown policy kind");
}

}  // namespace

std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::GoalSeek: return "goal_seek";
    case PolicyKind::Adversarial: return "adversarial";
    case PolicyKind::QTable: return "q_table";
    case PolicyKind::Replay: return "replay";
  }
  return "goal_seek";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "goal_seek") return PolicyKind::GoalSeek;
  if (s == "adversarial") return PolicyKind::Adversarial;
  if (s == "q_table") return PolicyKind::QTable;
  if (s == "replay") return PolicyKind::Replay;
  throw std::invalid_argument("unknown policy type '" + s + "'");
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::ReachedGoal: return "reached_goal";
    case Outcome::HorizonExpired: return "horizon_expired";
    case Outcome::Stopped: return "stopped";
  }
  return "horizon_expired";
}

StartInCollision::StartInCollision(Eigen::Vector2d start)
    : std::runtime_error("start " + point_string(start) + " lies in an unsafe cell") {}

void Scenario::validate() const {
  world.validate();
  filter.validate();
  solver.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");
  const double ticks = horizon / dt;
  if (std::abs(ticks - std::round(ticks)) > 1e-9 * std::max(1.0, ticks)) {
    throw std::invalid_argument("horizon must be an integer multiple of dt");
  }
  if (!std::isfinite(start.x()) || !std::isfinite(start.y())) throw std::invalid_argument("start must be finite");
  if (stop_after_flat_ticks < 1) throw std::invalid_argument("stop_after_flat_ticks must be at least 1");
}

std::size_t Scenario::tick_count() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

std::size_t Trajectory::count(filter::FilterFlag flag) const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.decision.has(flag) ? 1 : 0;
  return n;
}

CompiledScenario compile(const Scenario& sc) {
  CompiledScenario c;
  c.schedule = field::compile_schedule(sc.formula, sc.world, sc.horizon);
  c.fields = field::solve_schedule(c.schedule, sc.solver);
  return c;
}

Trajectory run(const Scenario& sc) { return run(sc, compile(sc)); }

Trajectory run(const Scenario& sc, const CompiledScenario& compiled) {
  sc.validate();
  const auto& schedule = compiled.schedule;
  const auto& first = schedule.epochs.front().occupancy;
  const field::CellState start_state = first.state_at_world(sc.start.x(), sc.start.y());
  if (start_state == field::CellState::Unsafe) throw StartInCollision(sc.start);

  Trajectory traj;
  traj.dt = sc.dt;
  traj.start = sc.start;
  if (start_state == field::CellState::Goal) {
    traj.outcome = Outcome::ReachedGoal;
    return traj;
  }

  auto nominal = make_policy(sc);
  const std::size_t ticks = sc.tick_count();
  traj.steps.reserve(ticks);

  Eigen::Vector2d position = sc.start;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  int flat_streak = 0;
  traj.outcome = Outcome::HorizonExpired;

  for (std::size_t k = 0; k < ticks; ++k) {
    Step step;
    step.t = static_cast<double>(k) * sc.dt;
    step.position = position;
    step.epoch = schedule.epoch_index_at(step.t);
    const auto& occupancy = schedule.epochs[step.epoch].occupancy;
    const auto& field = compiled.fields.at(step.epoch);

    // 1. policy force, 2. admittance, 3. field sample, 4. filter, 5. integrate
    const policy::PolicyOutput out = nominal->act({{position, velocity}, k, &occupancy});
    step.nominal_force = out.force;
    const Eigen::Vector2d u = filter::admittance(out.force, sc.filter.alpha_adm);
    const field::FieldSample fs = field::sample(field, position.x(), position.y());
    if (sc.filter_enabled) {
      step.decision = filter::filter_velocity(u, fs.V, fs.grad, sc.filter);
    } else {
      const auto check = filter::check_barrier(u, fs.V, fs.grad, sc.filter.k_alpha);
      step.decision.nominal_u = u;
      step.decision.V = fs.V;
      step.decision.grad = fs.grad;
      step.decision.lhs = check.lhs;
      step.decision.rhs = check.rhs;
      step.decision.violated = !check.satisfied;
      step.decision.output_u = u;
    }
    if (fs.clamped) step.decision.flags |= filter::kOutOfBounds;
    step.next_position = position + step.decision.output_u * sc.dt;

    flat_streak = step.decision.has(filter::kFlatGradientStop) ? flat_streak + 1 : 0;
    position = step.next_position;
    velocity = step.decision.output_u;
    traj.steps.push_back(step);

    if (occupancy.state_at_world(position.x(), position.y()) == field::CellState::Goal) {
      traj.outcome = Outcome::ReachedGoal;
      break;
    }
    if (flat_streak >= sc.stop_after_flat_ticks) {
      traj.outcome = Outcome::Stopped;
      break;
    }
  }
  return traj;
}

SafetyReport check_safety(const Trajectory& traj, const field::ConstraintSchedule& schedule) {
  SafetyReport report;
  auto probe = [&](const Eigen::Vector2d& p, double t, std::size_t epoch) {
    const auto& occ = schedule.epochs.at(epoch).occupancy;
    if (occ.state_at_world(p.x(), p.y()) != field::CellState::Unsafe) return true;
    const auto hit = occ.transform().locate(p.x(), p.y());
    report.safe = false;
    report.first_violation = SafetyViolation{t, hit.i, hit.j};
    return false;
  };

  if (traj.steps.empty()) {
    probe(traj.start, 0.0, 0);
    return report;
  }
  for (const auto& s : traj.steps) {
    if (!probe(s.position, s.t, s.epoch)) return report;
    for (int q = 1; q < 4; ++q) {
      const double f = q / 4.0;
      if (!probe(s.position + f * (s.next_position - s.position), s.t + f * traj.dt, s.epoch)) return report;
    }
  }
  const auto& last = traj.steps.back();
  probe(last.next_position, last.t + traj.dt, schedule.epoch_index_at(last.t + traj.dt));
  return report;
}

double safe_sublevel_bound(const field::PotentialField& f) {
  const auto& occ = f.occupancy();
  const int w = occ.width();
  const int h = occ.height();
  auto value = [&](int i, int j) { return occ.at(i, j) == field::CellState::Unsafe ? 1.0 : f.value(i, j); };
  double bound = 1.0;
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      if (occ.at(i, j) != field::CellState::Unsafe) continue;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int a = i + di;
          const int b = j + dj;
          if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= w || b >= h) continue;
          const double edge = (di == 0 || dj == 0)
                                  ? 0.5 * (1.0 + value(a, b))
                                  : 0.25 * (1.0 + value(a, b) + value(a, j) + value(i, b));
          bound = std::min(bound, edge);
        }
      }
    }
  }
  return bound;
}

AuditReport barrier_decrease_audit(const Trajectory& traj, const field::SolvedSchedule& fields, double k_alpha,
                                   double tol) {
  AuditReport report;
  const double decay = 1.0 - k_alpha * traj.dt;
  constexpr double kFloor = 1e-12;
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const Step& s = traj.steps[k];
    double v_next = 0.0;
    if (k + 1 < traj.steps.size()) {
      // Field switches make V discontinuous; those steps are not audited.
      if (traj.steps[k + 1].epoch != s.epoch) continue;
      v_next = traj.steps[k + 1].decision.V;
    } else {
      v_next = field::sample(fields.at(s.epoch), s.next_position.x(), s.next_position.y()).V;
    }
    const double v_now = s.decision.V;
    report.max_ratio = std::max(report.max_ratio, v_next / std::max(v_now, kFloor));
    if (v_next > decay * v_now + tol) {
      report.violations.push_back({k, s.t, s.position, v_now, v_next});
    }
  }
  return report;
}

stl::Signal to_signal(const Trajectory& traj, std::optional<double> hold_until) {
  std::vector<stl::Sample> samples;
  samples.reserve(traj.steps.size() + 1);
  for (const auto& s : traj.steps) samples.push_back({s.t, s.position.x(), s.position.y()});
  const Eigen::Vector2d last = traj.final_position();
  std::size_t k = traj.steps.size();
  samples.push_back({static_cast<double>(k) * traj.dt, last.x(), last.y()});
  if (hold_until) {
    while (samples.back().t < *hold_until - 1e-9 * traj.dt) {
      ++k;
      samples.push_back({static_cast<double>(k) * traj.dt, last.x(), last.y()});
    }
  }
  if (samples.size() == 1) samples.push_back({traj.dt, last.x(), last.y()});
  return stl::Signal(std::move(samples));
}

bool always_conjuncts_hold(const stl::Formula& f, const stl::Signal& s) {
  const auto verdict = stl::monitor(f, s);
  for (const auto& cv : verdict.per_conjunct) {
    if (f.conjuncts[cv.index].op == stl::TemporalOp::Always && !cv.satisfied) return false;
  }
  return true;
}

}  // namespace hclbf::sim
