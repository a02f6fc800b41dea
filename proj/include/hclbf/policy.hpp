#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hclbf/field.hpp"
#include "hclbf/filter.hpp"

namespace hclbf::policy {

struct PolicyState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
};

// ---------------------------------------------------------------------------
// Scripted baselines

/// gain * (goal - position), clipped to unit magnitude.
Eigen::Vector2d policy_goal_seek(const PolicyState& s, const Eigen::Vector2d& goal, double gain);

/// Unit force toward `target`; zero when already there.
Eigen::Vector2d policy_adversarial(const PolicyState& s, const Eigen::Vector2d& target);

/// Center of the Unsafe cell nearest to `position`; ties go to the lowest cell index.
std::optional<Eigen::Vector2d> nearest_unsafe_center(const field::OccupancyGrid& occ,
                                                     const Eigen::Vector2d& position);

// ---------------------------------------------------------------------------
// Reward shaping

struct RewardParams {
  double step_penalty = 0.01;
  double success_bonus = 10.0;
  double oob_penalty = -10.0;
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
};

/// -|x - goal| - step_penalty, plus success_bonus at the goal, plus
/// oob_penalty when out of bounds.
double reward(const PolicyState& s, const RewardParams& params, bool in_bounds, bool at_goal);

// ---------------------------------------------------------------------------
// Tabular Q-learning

inline constexpr std::size_t kNumActions = 8;

/// Eight unit forces, counter-clockwise from +x (E, NE, N, NW, W, SW, S, SE).
const std::array<Eigen::Vector2d, kNumActions>& action_forces();
/// Grid step (di, dj) for each action.
const std::array<std::array<int, 2>, kNumActions>& action_steps();

struct QHyperParams {
  double gamma = 0.9;
  double alpha_lr = 0.1;
  double epsilon = 0.1;

  void validate() const;
};

/// Cell-discretized training world: states are cells, goal cells are terminal.
struct TrainingGrid {
  int width = 0;
  int height = 0;
  std::vector<Eigen::Vector2d> centers;  // world position of each cell, row-major
  std::vector<bool> goal;

  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * width + i; }

  /// Goal cells are the world's static goal, or the cell holding `goal_point`
  /// when the world has none.
  static TrainingGrid from_world(const field::WorldSpec& world, const Eigen::Vector2d& goal_point);
  /// Unit-spaced grid with the given goal cells (for small fixtures).
  static TrainingGrid unit(int width, int height, const std::vector<std::size_t>& goal_cells);
};

class QTable {
 public:
  using Row = std::array<double, kNumActions>;

  QTable() = default;
  QTable(int width, int height, QHyperParams hyper) : width_(width), height_(height), hyper_(hyper) {}

  int width() const { return width_; }
  int height() const { return height_; }
  const QHyperParams& hyper() const { return hyper_; }
  std::uint64_t seed = 0;
  int episodes = 0;

  bool visited(std::size_t cell) const { return values_.count(cell) != 0; }
  const Row* row(std::size_t cell) const;
  Row& row_mut(std::size_t cell);
  double max_q(std::size_t cell) const;
  std::uint32_t visits(std::size_t cell, std::size_t action) const;
  void count_visit(std::size_t cell, std::size_t action);
  void set_visits(std::size_t cell, std::size_t action, std::uint32_t count);
  /// argmax over actions, ties to the lowest index; nullopt if unvisited.
  std::optional<std::size_t> greedy_action(std::size_t cell) const;

  const std::map<std::size_t, Row>& values() const { return values_; }

  bool operator==(const QTable& o) const;

 private:
  int width_ = 0;
  int height_ = 0;
  QHyperParams hyper_;
  std::map<std::size_t, Row> values_;
  std::map<std::size_t, std::array<std::uint32_t, kNumActions>> visits_;
};

/// Optional filter applied to exploratory actions during training.
struct TrainingShield {
  const field::PotentialField* field = nullptr;
  filter::FilterParams params;
};

struct TrainOptions {
  int episodes = 1000;
  std::uint64_t seed = 0;
  int max_steps = 0;  // 0 picks 4 * (width + height)
  std::optional<TrainingShield> shield;
};

QTable q_train(const TrainingGrid& grid, const RewardParams& reward_params, const QHyperParams& hyper,
               const TrainOptions& options);
QTable q_train(const field::WorldSpec& world, const RewardParams& reward_params, const QHyperParams& hyper,
               int episodes, std::uint64_t seed);

/// Fraction of greedy rollouts from random non-goal cells that reach a goal.
double evaluate_greedy(const TrainingGrid& grid, const QTable& table, int episodes, std::uint64_t seed,
                       int max_steps = 0);

struct PolicyOutput {
  Eigen::Vector2d force = Eigen::Vector2d::Zero();
  bool fallback = false;  // UnvisitedState: goal_seek was used instead
};

/// Unit force along the greedy action of the agent's cell.
PolicyOutput policy_q(const PolicyState& s, const QTable& table, const field::GridTransform& transform,
                      const Eigen::Vector2d& goal, double gain = 1.0);

void save_qtable(const QTable& table, const std::filesystem::path& path);
QTable load_qtable(const std::filesystem::path& path);
std::string qtable_to_json(const QTable& table);
QTable qtable_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Runtime policies used by the simulator

struct PolicyContext {
  PolicyState state;
  std::size_t tick = 0;
  const field::OccupancyGrid* occupancy = nullptr;  // active epoch
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyOutput act(const PolicyContext& ctx) = 0;
};

class GoalSeekPolicy : public Policy {
 public:
  /// With probability `noise` a uniformly random unit force replaces the goal-seeking one.
  GoalSeekPolicy(Eigen::Vector2d goal, double gain, double noise = 0.0, std::uint64_t seed = 0);
  PolicyOutput act(const PolicyContext& ctx) override;

 private:
  Eigen::Vector2d goal_;
  double gain_;
  double noise_;
  std::mt19937_64 rng_;
};

class AdversarialPolicy : public Policy {
 public:
  PolicyOutput act(const PolicyContext& ctx) override;

 private:
  const field::OccupancyGrid* cached_for_ = nullptr;
  std::vector<Eigen::Vector2d> unsafe_centers_;
};

class QTablePolicy : public Policy {
 public:
  QTablePolicy(QTable table, field::GridTransform transform, Eigen::Vector2d goal, double gain);
  PolicyOutput act(const PolicyContext& ctx) override;

 private:
  QTable table_;
  field::GridTransform transform_;
  Eigen::Vector2d goal_;
  double gain_;
};

/// Replays a recorded per-tick force sequence; zero force after the end.
class ReplayPolicy : public Policy {
 public:
  explicit ReplayPolicy(std::vector<Eigen::Vector2d> forces) : forces_(std::move(forces)) {}
  PolicyOutput act(const PolicyContext& ctx) override;
  const std::vector<Eigen::Vector2d>& forces() const { return forces_; }

 private:
  std::vector<Eigen::Vector2d> forces_;
};

/// CSV with header `fx,fy`, one row per tick.
std::vector<Eigen::Vector2d> load_replay_csv(const std::filesystem::path& path);
void save_replay_csv(const std::vector<Eigen::Vector2d>& forces, const std::filesystem::path& path);

// Portable draws so that seeded runs are identical across standard libraries.
double uniform01(std::mt19937_64& rng);
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

}  // namespace hclbf::policy
