#include <cmath>
#include <fstream>
#include <sstream>

#include "hclbf/policy.hpp"

namespace hclbf::policy {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return n == 0 ? 0 : static_cast<std::size_t>(rng() % n);
}

Eigen::Vector2d policy_goal_seek(const PolicyState& s, const Eigen::Vector2d& goal, double gain) {
  Eigen::Vector2d f = gain * (goal - s.position);
  const double n = f.norm();
  if (n > 1.0) f /= n;
  return f;
}

Eigen::Vector2d policy_adversarial(const PolicyState& s, const Eigen::Vector2d& target) {
  const Eigen::Vector2d d = target - s.position;
  const double n = d.norm();
  if (n == 0.0) return Eigen::Vector2d::Zero();
  return d / n;
}

std::optional<Eigen::Vector2d> nearest_unsafe_center(const field::OccupancyGrid& occ,
                                                     const Eigen::Vector2d& position) {
  std::optional<Eigen::Vector2d> best;
  double best_d2 = 0.0;
  for (int j = 0; j < occ.height(); ++j) {
    for (int i = 0; i < occ.width(); ++i) {
      if (occ.at(i, j) != field::CellState::Unsafe) continue;
      const Eigen::Vector2d c = occ.transform().cell_center(i, j);
      const double d2 = (c - position).squaredNorm();
      if (!best || d2 < best_d2) {
        best = c;
        best_d2 = d2;
      }
    }
  }
  return best;
}

double reward(const PolicyState& s, const RewardParams& params, bool in_bounds, bool at_goal) {
  double r = -(s.position - params.goal).norm() - params.step_penalty;
  if (at_goal) r += params.success_bonus;
  if (!in_bounds) r += params.oob_penalty;
  return r;
}

GoalSeekPolicy::GoalSeekPolicy(Eigen::Vector2d goal, double gain, double noise, std::uint64_t seed)
    : goal_(std::move(goal)), gain_(gain), noise_(noise), rng_(seed) {}

PolicyOutput GoalSeekPolicy::act(const PolicyContext& ctx) {
  if (noise_ > 0.0 && uniform01(rng_) < noise_) {
    const double angle = 2.0 * M_PI * uniform01(rng_);
    return {Eigen::Vector2d(std::cos(angle), std::sin(angle)), false};
  }
  return {policy_goal_seek(ctx.state, goal_, gain_), false};
}

PolicyOutput AdversarialPolicy::act(const PolicyContext& ctx) {
  if (ctx.occupancy == nullptr) return {};
  if (cached_for_ != ctx.occupancy) {
    // Index order is kept so the first minimum found is the lowest index.
    unsafe_centers_.clear();
    const auto& occ = *ctx.occupancy;
    for (int j = 0; j < occ.height(); ++j) {
      for (int i = 0; i < occ.width(); ++i) {
        if (occ.at(i, j) == field::CellState::Unsafe) unsafe_centers_.push_back(occ.transform().cell_center(i, j));
      }
    }
    cached_for_ = ctx.occupancy;
  }
  const Eigen::Vector2d* best = nullptr;
  double best_d2 = 0.0;
  for (const auto& c : unsafe_centers_) {
    const double d2 = (c - ctx.state.position).squaredNorm();
    if (best == nullptr || d2 < best_d2) {
      best = &c;
      best_d2 = d2;
    }
  }
  if (best == nullptr) return {};
  return {policy_adversarial(ctx.state, *best), false};
}

PolicyOutput ReplayPolicy::act(const PolicyContext& ctx) {
  if (ctx.tick >= forces_.size()) return {};
  return {forces_[ctx.tick], false};
}

std::vector<Eigen::Vector2d> load_replay_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open replay file " + path.string());
  std::vector<Eigen::Vector2d> forces;
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (header) {
      header = false;
      if (line.rfind("fx", 0) == 0) continue;
    }
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',')) {
      throw std::runtime_error("replay file line " + std::to_string(line_no) + ": expected fx,fy");
    }
    forces.emplace_back(std::stod(a), std::stod(b));
  }
  return forces;
}

void save_replay_csv(const std::vector<Eigen::Vector2d>& forces, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write replay file " + path.string());
  out.precision(17);
  out << "fx,fy\n";
  for (const auto& f : forces) out << f.x() << ',' << f.y() << '\n';
}

}  // namespace hclbf::policy
