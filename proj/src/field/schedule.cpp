#include <algorithm>
#include <cmath>

#include "hclbf/field.hpp"

namespace hclbf::field {

namespace {

// Cell centers within this fraction of a cell from a threshold count as lying
// on it, so grid-aligned thresholds are not at the mercy of rounding.
constexpr double kSnapFraction = 1e-9;

double snap(double value, double threshold, double cell) {
  return std::abs(value - threshold) <= kSnapFraction * cell ? threshold : value;
}

bool center_satisfies(const std::vector<stl::Literal>& body, const Eigen::Vector2d& c, double dx, double dy) {
  for (const auto& lit : body) {
    const bool on_x = lit.atom.axis == stl::Axis::X;
    const double x = on_x ? snap(c.x(), lit.atom.threshold, dx) : c.x();
    const double y = on_x ? c.y() : snap(c.y(), lit.atom.threshold, dy);
    if (!stl::evaluate_literal(lit, x, y)) return false;
  }
  return true;
}

std::size_t popcount(const std::vector<bool>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

bool overlaps(double a, double b, double t1, double t2) { return a < t2 && b > t1; }

}  // namespace

std::vector<bool> rasterize(const std::vector<stl::Literal>& body, const GridTransform& t) {
  std::vector<bool> mask(static_cast<std::size_t>(t.width()) * t.height(), false);
  for (int j = 0; j < t.height(); ++j) {
    for (int i = 0; i < t.width(); ++i) {
      mask[static_cast<std::size_t>(j) * t.width() + i] = center_satisfies(body, t.cell_center(i, j), t.cell_dx(), t.cell_dy());
    }
  }
  return mask;
}

std::vector<bool> rasterize(const Rect& r, const GridTransform& t) {
  std::vector<bool> mask(static_cast<std::size_t>(t.width()) * t.height(), false);
  const double ex = kSnapFraction * t.cell_dx();
  const double ey = kSnapFraction * t.cell_dy();
  for (int j = 0; j < t.height(); ++j) {
    for (int i = 0; i < t.width(); ++i) {
      const Eigen::Vector2d c = t.cell_center(i, j);
      mask[static_cast<std::size_t>(j) * t.width() + i] =
          c.x() >= r.x_min - ex && c.x() <= r.x_max + ex && c.y() >= r.y_min - ey && c.y() <= r.y_max + ey;
    }
  }
  return mask;
}

std::size_t ConstraintSchedule::epoch_index_at(double t) const {
  for (std::size_t k = 0; k + 1 < epochs.size(); ++k) {
    if (t < epochs[k].t_end) return k;
  }
  return epochs.empty() ? 0 : epochs.size() - 1;
}

ConstraintSchedule compile_schedule(const std::optional<stl::Formula>& formula, const WorldSpec& world,
                                    double horizon) {
  world.validate();
  if (!std::isfinite(horizon) || !(horizon > 0.0)) {
    throw std::invalid_argument("horizon must be positive");
  }
  if (formula && formula->max_time() > horizon + 1e-9) {
    throw std::invalid_argument("horizon is shorter than the formula's last window");
  }

  const GridTransform transform(world);
  const std::size_t n = static_cast<std::size_t>(world.width) * world.height;

  std::vector<double> cuts{0.0, horizon};
  std::vector<std::vector<bool>> conjunct_masks;
  if (formula) {
    for (const auto& c : formula->conjuncts) {
      for (double t : {c.t1, c.t2}) {
        if (t > 0.0 && t < horizon) cuts.push_back(t);
      }
      conjunct_masks.push_back(rasterize(c.body, transform));
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
             cuts.end());

  std::vector<std::vector<bool>> obstacle_masks;
  for (const auto& r : world.static_obstacles) obstacle_masks.push_back(rasterize(r, transform));
  std::vector<bool> static_goal_mask(n, false);
  if (world.static_goal) static_goal_mask = rasterize(*world.static_goal, transform);

  ConstraintSchedule schedule;
  schedule.horizon = horizon;
  for (std::size_t e = 0; e + 1 < cuts.size(); ++e) {
    Epoch epoch;
    epoch.t_start = cuts[e];
    epoch.t_end = cuts[e + 1];

    std::vector<bool> goal = static_goal_mask;
    std::vector<bool> unsafe(n, false);
    if (world.static_goal) {
      epoch.provenance.push_back({RegionSource::StaticGoal, 0, CellState::Goal, popcount(static_goal_mask)});
    }

    std::optional<std::vector<bool>> eventual;
    std::size_t active_eventually = 0;
    if (formula) {
      for (std::size_t k = 0; k < formula->conjuncts.size(); ++k) {
        const auto& c = formula->conjuncts[k];
        if (!overlaps(epoch.t_start, epoch.t_end, c.t1, c.t2)) continue;
        const auto& mask = conjunct_masks[k];
        if (c.op == stl::TemporalOp::Always) {
          std::size_t claimed = 0;
          for (std::size_t q = 0; q < n; ++q) {
            if (!mask[q]) {
              unsafe[q] = true;
              ++claimed;
            }
          }
          epoch.provenance.push_back({RegionSource::Conjunct, k, CellState::Unsafe, claimed});
        } else {
          ++active_eventually;
          epoch.provenance.push_back({RegionSource::Conjunct, k, CellState::Goal, popcount(mask)});
          if (!eventual) {
            eventual = mask;
          } else {
            for (std::size_t q = 0; q < n; ++q) (*eventual)[q] = (*eventual)[q] && mask[q];
          }
        }
      }
    }
    if (eventual) {
      if (active_eventually > 1 && popcount(*eventual) == 0) {
        throw EmptyGoalIntersection(e);
      }
      for (std::size_t q = 0; q < n; ++q) goal[q] = goal[q] || (*eventual)[q];
    }

    for (std::size_t r = 0; r < obstacle_masks.size(); ++r) {
      const auto& mask = obstacle_masks[r];
      for (std::size_t q = 0; q < n; ++q) unsafe[q] = unsafe[q] || mask[q];
      epoch.provenance.push_back({RegionSource::StaticObstacle, r, CellState::Unsafe, popcount(mask)});
    }

    OccupancyGrid occ(transform);
    for (int j = 0; j < world.height; ++j) {
      for (int i = 0; i < world.width; ++i) {
        const std::size_t q = occ.index(i, j);
        if (unsafe[q]) occ.set(i, j, CellState::Unsafe);
        else if (goal[q]) occ.set(i, j, CellState::Goal);
      }
    }
    occ.mark_border_unsafe();
    epoch.provenance.push_back({RegionSource::Border, 0, CellState::Unsafe,
                                2 * static_cast<std::size_t>(world.width + world.height) - 4});

    if (occ.count(CellState::Goal) == 0) throw NoGoalCell(e);
    epoch.occupancy = std::move(occ);
    schedule.epochs.push_back(std::move(epoch));
  }
  return schedule;
}

}  // namespace hclbf::field
