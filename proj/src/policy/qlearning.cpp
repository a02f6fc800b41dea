#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hclbf/policy.hpp"

namespace hclbf::policy {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

struct Transition {
  std::size_t next;
  bool in_bounds;
};

Transition step(const TrainingGrid& g, std::size_t cell, std::size_t action) {
  const int i = static_cast<int>(cell % g.width);
  const int j = static_cast<int>(cell / g.width);
  const auto [di, dj] = action_steps()[action];
  const int ni = i + di;
  const int nj = j + dj;
  if (ni < 0 || nj < 0 || ni >= g.width || nj >= g.height) return {cell, false};
  return {g.index(ni, nj), true};
}

std::size_t closest_action(const Eigen::Vector2d& direction) {
  std::size_t best = 0;
  double best_dot = -2.0;
  const Eigen::Vector2d d = direction.normalized();
  for (std::size_t a = 0; a < kNumActions; ++a) {
    const double dot = action_forces()[a].dot(d);
    if (dot > best_dot) {
      best_dot = dot;
      best = a;
    }
  }
  return best;
}

// Executed action under the shield; nullopt means the agent holds position.
std::optional<std::size_t> shield_action(const TrainingShield& shield, const Eigen::Vector2d& at, std::size_t a) {
  const Eigen::Vector2d u = filter::admittance(action_forces()[a], shield.params.alpha_adm);
  const field::FieldSample s = field::sample(*shield.field, at.x(), at.y());
  const filter::FilterDecision d = filter::filter_velocity(u, s.V, s.grad, shield.params);
  if (!d.violated) return a;
  if (d.has(filter::kFlatGradientStop) || d.output_u.norm() < 1e-12) return std::nullopt;
  return closest_action(d.output_u);
}

std::vector<std::size_t> start_cells(const TrainingGrid& g) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.goal[k]) out.push_back(k);
  }
  return out;
}

}  // namespace

const std::array<Eigen::Vector2d, kNumActions>& action_forces() {
  static const std::array<Eigen::Vector2d, kNumActions> forces{
      Eigen::Vector2d(1.0, 0.0),         Eigen::Vector2d(kInvSqrt2, kInvSqrt2),
      Eigen::Vector2d(0.0, 1.0),         Eigen::Vector2d(-kInvSqrt2, kInvSqrt2),
      Eigen::Vector2d(-1.0, 0.0),        Eigen::Vector2d(-kInvSqrt2, -kInvSqrt2),
      Eigen::Vector2d(0.0, -1.0),        Eigen::Vector2d(kInvSqrt2, -kInvSqrt2),
  };
  return forces;
}

const std::array<std::array<int, 2>, kNumActions>& action_steps() {
  static const std::array<std::array<int, 2>, kNumActions> steps{{
      {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
  }};
  return steps;
}

void QHyperParams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(alpha_lr > 0.0 && alpha_lr <= 1.0)) throw std::invalid_argument("alpha_lr must lie in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
}

TrainingGrid TrainingGrid::from_world(const field::WorldSpec& world, const Eigen::Vector2d& goal_point) {
  world.validate();
  const field::GridTransform t(world);
  TrainingGrid g;
  g.width = world.width;
  g.height = world.height;
  for (int j = 0; j < g.height; ++j) {
    for (int i = 0; i < g.width; ++i) g.centers.push_back(t.cell_center(i, j));
  }
  if (world.static_goal) {
    g.goal = field::rasterize(*world.static_goal, t);
  } else {
    g.goal.assign(g.size(), false);
    const auto hit = t.locate(goal_point.x(), goal_point.y());
    g.goal[g.index(hit.i, hit.j)] = true;
  }
  return g;
}

TrainingGrid TrainingGrid::unit(int width, int height, const std::vector<std::size_t>& goal_cells) {
  TrainingGrid g;
  g.width = width;
  g.height = height;
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) g.centers.emplace_back(i, j);
  }
  g.goal.assign(g.size(), false);
  for (std::size_t c : goal_cells) g.goal.at(c) = true;
  return g;
}

const QTable::Row* QTable::row(std::size_t cell) const {
  auto it = values_.find(cell);
  return it == values_.end() ? nullptr : &it->second;
}

QTable::Row& QTable::row_mut(std::size_t cell) {
  auto [it, inserted] = values_.try_emplace(cell);
  if (inserted) it->second.fill(0.0);
  return it->second;
}

double QTable::max_q(std::size_t cell) const {
  const Row* r = row(cell);
  return r == nullptr ? 0.0 : *std::max_element(r->begin(), r->end());
}

std::uint32_t QTable::visits(std::size_t cell, std::size_t action) const {
  auto it = visits_.find(cell);
  return it == visits_.end() ? 0 : it->second[action];
}

void QTable::count_visit(std::size_t cell, std::size_t action) {
  auto [it, inserted] = visits_.try_emplace(cell);
  if (inserted) it->second.fill(0);
  ++it->second[action];
}

void QTable::set_visits(std::size_t cell, std::size_t action, std::uint32_t count) {
  auto [it, inserted] = visits_.try_emplace(cell);
  if (inserted) it->second.fill(0);
  it->second[action] = count;
}

std::optional<std::size_t> QTable::greedy_action(std::size_t cell) const {
  const Row* r = row(cell);
  if (r == nullptr) return std::nullopt;
  return static_cast<std::size_t>(std::max_element(r->begin(), r->end()) - r->begin());
}

bool QTable::operator==(const QTable& o) const {
  return width_ == o.width_ && height_ == o.height_ && hyper_.gamma == o.hyper_.gamma &&
         hyper_.alpha_lr == o.hyper_.alpha_lr && hyper_.epsilon == o.hyper_.epsilon && seed == o.seed &&
         episodes == o.episodes && values_ == o.values_ && visits_ == o.visits_;
}

QTable q_train(const TrainingGrid& grid, const RewardParams& reward_params, const QHyperParams& hyper,
               const TrainOptions& options) {
  hyper.validate();
  if (options.episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  const auto starts = start_cells(grid);
  if (starts.empty()) throw std::invalid_argument("training grid has no non-goal cell");
  if (std::find(grid.goal.begin(), grid.goal.end(), true) == grid.goal.end()) {
    throw std::invalid_argument("training grid has no goal cell");
  }
  const int max_steps = options.max_steps > 0 ? options.max_steps : 4 * (grid.width + grid.height);

  QTable table(grid.width, grid.height, hyper);
  table.seed = options.seed;
  table.episodes = options.episodes;
  std::mt19937_64 rng(options.seed);

  for (int ep = 0; ep < options.episodes; ++ep) {
    std::size_t s = starts[uniform_index(rng, starts.size())];
    for (int t = 0; t < max_steps; ++t) {
      std::size_t a = 0;
      if (hyper.epsilon > 0.0 && uniform01(rng) < hyper.epsilon) {
        a = uniform_index(rng, kNumActions);
      } else {
        a = table.greedy_action(s).value_or(0);
      }

      Transition tr{s, true};
      if (options.shield) {
        const auto executed = shield_action(*options.shield, grid.centers[s], a);
        if (executed) {
          a = *executed;
          tr = step(grid, s, a);
        }
      } else {
        tr = step(grid, s, a);
      }

      const bool at_goal = grid.goal[tr.next];
      const double r = reward({grid.centers[tr.next], Eigen::Vector2d::Zero()}, reward_params, tr.in_bounds, at_goal);
      const double target = at_goal ? r : r + hyper.gamma * table.max_q(tr.next);
      double& q = table.row_mut(s)[a];
      q += hyper.alpha_lr * (target - q);
      table.count_visit(s, a);

      s = tr.next;
      if (at_goal) break;
    }
  }
  return table;
}

QTable q_train(const field::WorldSpec& world, const RewardParams& reward_params, const QHyperParams& hyper,
               int episodes, std::uint64_t seed) {
  TrainOptions opts;
  opts.episodes = episodes;
  opts.seed = seed;
  return q_train(TrainingGrid::from_world(world, reward_params.goal), reward_params, hyper, opts);
}

double evaluate_greedy(const TrainingGrid& grid, const QTable& table, int episodes, std::uint64_t seed,
                       int max_steps) {
  if (episodes <= 0) return 0.0;
  const auto starts = start_cells(grid);
  if (starts.empty()) return 1.0;
  const int limit = max_steps > 0 ? max_steps : 4 * (grid.width + grid.height);
  std::mt19937_64 rng(seed);
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    std::size_t s = starts[uniform_index(rng, starts.size())];
    for (int t = 0; t < limit; ++t) {
      const auto a = table.greedy_action(s);
      if (!a) break;
      s = step(grid, s, *a).next;
      if (grid.goal[s]) {
        ++successes;
        break;
      }
    }
  }
  return static_cast<double>(successes) / episodes;
}

PolicyOutput policy_q(const PolicyState& s, const QTable& table, const field::GridTransform& transform,
                      const Eigen::Vector2d& goal, double gain) {
  const auto hit = transform.locate(s.position.x(), s.position.y());
  const std::size_t cell = static_cast<std::size_t>(hit.j) * table.width() + hit.i;
  const auto a = table.greedy_action(cell);
  if (!a) return {policy_goal_seek(s, goal, gain), true};
  return {action_forces()[*a], false};
}

QTablePolicy::QTablePolicy(QTable table, field::GridTransform transform, Eigen::Vector2d goal, double gain)
    : table_(std::move(table)), transform_(transform), goal_(std::move(goal)), gain_(gain) {
  if (table_.width() != transform_.width() || table_.height() != transform_.height()) {
    throw std::invalid_argument("Q-table dimensions do not match the scenario grid");
  }
}

PolicyOutput QTablePolicy::act(const PolicyContext& ctx) { return policy_q(ctx.state, table_, transform_, goal_, gain_); }

std::string qtable_to_json(const QTable& table) {
  nlohmann::json j;
  j["width"] = table.width();
  j["height"] = table.height();
  j["seed"] = table.seed;
  j["episodes"] = table.episodes;
  j["hyperparams"] = {{"gamma", table.hyper().gamma},
                      {"alpha_lr", table.hyper().alpha_lr},
                      {"epsilon", table.hyper().epsilon}};
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& f : action_forces()) actions.push_back({f.x(), f.y()});
  j["actions"] = actions;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [cell, row] : table.values()) {
    nlohmann::json visits = nlohmann::json::array();
    for (std::size_t a = 0; a < kNumActions; ++a) visits.push_back(table.visits(cell, a));
    cells.push_back({{"cell", cell}, {"values", row}, {"visits", visits}});
  }
  j["cells"] = cells;
  return j.dump(1);
}

QTable qtable_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  QHyperParams hyper;
  hyper.gamma = j.at("hyperparams").at("gamma").get<double>();
  hyper.alpha_lr = j.at("hyperparams").at("alpha_lr").get<double>();
  hyper.epsilon = j.at("hyperparams").at("epsilon").get<double>();
  QTable table(j.at("width").get<int>(), j.at("height").get<int>(), hyper);
  table.seed = j.value("seed", std::uint64_t{0});
  table.episodes = j.value("episodes", 0);
  const std::size_t n = static_cast<std::size_t>(table.width()) * table.height();
  for (const auto& c : j.at("cells")) {
    const auto cell = c.at("cell").get<std::size_t>();
    if (cell >= n) throw std::invalid_argument("Q-table cell index out of range");
    const auto values = c.at("values").get<std::vector<double>>();
    if (values.size() != kNumActions) throw std::invalid_argument("Q-table row must have 8 values");
    auto& row = table.row_mut(cell);
    std::copy(values.begin(), values.end(), row.begin());
    if (c.contains("visits")) {
      const auto visits = c.at("visits").get<std::vector<std::uint32_t>>();
      for (std::size_t a = 0; a < std::min(visits.size(), kNumActions); ++a) {
        table.set_visits(cell, a, visits[a]);
      }
    }
  }
  return table;
}

void save_qtable(const QTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write Q-table " + path.string());
  out << qtable_to_json(table) << '\n';
}

QTable load_qtable(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open Q-table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return qtable_from_json(ss.str());
}

}  // namespace hclbf::policy
