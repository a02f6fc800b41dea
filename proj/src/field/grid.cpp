#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hclbf/field.hpp"

namespace hclbf::field {

namespace {

bool finite_rect(const Rect& r) {
  return std::isfinite(r.x_min) && std::isfinite(r.x_max) && std::isfinite(r.y_min) && std::isfinite(r.y_max);
}

void validate_rect(const Rect& r, const WorldSpec& w, const char* what) {
  const double tol_x = 1e-9 * (w.x_max - w.x_min);
  const double tol_y = 1e-9 * (w.y_max - w.y_min);
  if (!finite_rect(r) || r.x_min > r.x_max || r.y_min > r.y_max) {
    throw std::invalid_argument(std::string(what) + " rectangle is malformed");
  }
  if (r.x_min < w.x_min - tol_x || r.x_max > w.x_max + tol_x || r.y_min < w.y_min - tol_y ||
      r.y_max > w.y_max + tol_y) {
    throw std::invalid_argument(std::string(what) + " rectangle lies outside the world bounds");
  }
}

std::string epoch_suffix(std::optional<std::size_t> epoch) {
  return epoch ? " in epoch " + std::to_string(*epoch) : std::string{};
}

}  // namespace

void WorldSpec::validate() const {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) || !std::isfinite(y_max)) {
    throw std::invalid_argument("world bounds must be finite");
  }
  if (!(x_min < x_max) || !(y_min < y_max)) {
    throw std::invalid_argument("world bounds must satisfy min < max");
  }
  if (width < 3 || height < 3) {
    throw std::invalid_argument("grid must be at least 3x3");
  }
  for (const auto& r : static_obstacles) validate_rect(r, *this, "obstacle");
  if (static_goal) validate_rect(*static_goal, *this, "goal");
}

GridTransform::GridTransform(double x_min, double x_max, double y_min, double y_max, int width, int height)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max), width_(width), height_(height) {
  if (width < 2 || height < 2 || !(x_min < x_max) || !(y_min < y_max)) {
    throw std::invalid_argument("degenerate grid transform");
  }
}

GridTransform::GridTransform(const WorldSpec& w)
    : GridTransform(w.x_min, w.x_max, w.y_min, w.y_max, w.width, w.height) {}

GridTransform GridTransform::unit(int width, int height) {
  return GridTransform(0.0, width - 1.0, 0.0, height - 1.0, width, height);
}

Eigen::Vector2d GridTransform::world_to_grid(double x, double y) const {
  return {(x - x_min_) / (x_max_ - x_min_) * (width_ - 1), (y - y_min_) / (y_max_ - y_min_) * (height_ - 1)};
}

Eigen::Vector2d GridTransform::grid_to_world(double i, double j) const {
  return {x_min_ + i / (width_ - 1) * (x_max_ - x_min_), y_min_ + j / (height_ - 1) * (y_max_ - y_min_)};
}

Eigen::Vector2d GridTransform::cell_center(int i, int j) const {
  // Endpoints exact so that thresholds on the world bounds rasterize cleanly.
  const double x = i == width_ - 1 ? x_max_ : x_min_ + i * (x_max_ - x_min_) / (width_ - 1);
  const double y = j == height_ - 1 ? y_max_ : y_min_ + j * (y_max_ - y_min_) / (height_ - 1);
  return {x, y};
}

GridTransform::CellHit GridTransform::locate(double x, double y) const {
  const Eigen::Vector2d g = world_to_grid(x, y);
  CellHit hit;
  hit.inside = x >= x_min_ && x <= x_max_ && y >= y_min_ && y <= y_max_;
  hit.i = static_cast<int>(std::clamp(std::round(g.x()), 0.0, width_ - 1.0));
  hit.j = static_cast<int>(std::clamp(std::round(g.y()), 0.0, height_ - 1.0));
  return hit;
}

OccupancyGrid::OccupancyGrid(GridTransform transform, CellState fill)
    : transform_(transform),
      cells_(static_cast<std::size_t>(transform.width()) * static_cast<std::size_t>(transform.height()), fill) {}

std::size_t OccupancyGrid::count(CellState s) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), s));
}

void OccupancyGrid::mark_border_unsafe() {
  for (int i = 0; i < width(); ++i) {
    set(i, 0, CellState::Unsafe);
    set(i, height() - 1, CellState::Unsafe);
  }
  for (int j = 0; j < height(); ++j) {
    set(0, j, CellState::Unsafe);
    set(width() - 1, j, CellState::Unsafe);
  }
}

CellState OccupancyGrid::state_at_world(double x, double y) const {
  const auto hit = transform_.locate(x, y);
  if (!hit.inside) return CellState::Unsafe;
  return at(hit.i, hit.j);
}

std::uint64_t OccupancyGrid::hash() const {
  // FNV-1a
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  mix(static_cast<std::uint64_t>(width()));
  mix(static_cast<std::uint64_t>(height()));
  for (CellState c : cells_) mix(static_cast<std::uint64_t>(c));
  return h;
}

NoGoalCell::NoGoalCell(std::optional<std::size_t> epoch)
    : std::runtime_error("no goal cell" + epoch_suffix(epoch) +
                         ": at least one goal cell is required to build the potential field"),
      epoch_(epoch) {}

EmptyGoalIntersection::EmptyGoalIntersection(std::size_t epoch)
    : std::runtime_error("eventually-conjuncts active in epoch " + std::to_string(epoch) +
                         " have disjoint goal regions"),
      epoch_(epoch) {}

NonConverged::NonConverged(SolveStats stats, std::optional<std::size_t> epoch)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "relaxation did not converge" << epoch_suffix(epoch) << " after " << stats.iterations
           << " iterations (residual " << stats.final_residual << ")";
        return os.str();
      }()),
      stats_(stats),
      epoch_(epoch) {}

OccupancyGrid random_obstacle_grid(int width, int height, double fraction, std::uint64_t seed) {
  if (width < 8 || height < 8) throw std::invalid_argument("random obstacle grid needs at least 8x8 cells");
  if (!(fraction >= 0.0 && fraction < 0.5)) throw std::invalid_argument("obstacle fraction must lie in [0, 0.5)");
  std::mt19937_64 rng(seed);
  auto draw = [&rng](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };

  OccupancyGrid occ(GridTransform::unit(width, height));
  occ.mark_border_unsafe();
  const int ci = width / 2 - 1;
  const int cj = height / 2 - 1;
  const auto target = static_cast<std::size_t>(fraction * static_cast<double>(width) * height);
  const int max_side = std::max(2, std::min(width, height) / 8);
  std::size_t covered = 0;
  for (int attempt = 0; attempt < 100000 && covered < target; ++attempt) {
    const int w = draw(1, max_side);
    const int h = draw(1, max_side);
    const int i0 = draw(1, width - 1 - w);
    const int j0 = draw(1, height - 1 - h);
    // Keep a one-cell Free ring around the goal block.
    if (i0 <= ci + 2 && ci - 1 <= i0 + w - 1 && j0 <= cj + 2 && cj - 1 <= j0 + h - 1) continue;
    for (int j = j0; j < j0 + h; ++j) {
      for (int i = i0; i < i0 + w && covered < target; ++i) {
        if (occ.at(i, j) == CellState::Unsafe) continue;
        occ.set(i, j, CellState::Unsafe);
        ++covered;
      }
    }
  }
  for (int j = cj; j <= cj + 1; ++j)
    for (int i = ci; i <= ci + 1; ++i) occ.set(i, j, CellState::Goal);
  return occ;
}

}  // namespace hclbf::field
