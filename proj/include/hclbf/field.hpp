#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hclbf/stl.hpp"

namespace hclbf::field {

/// Axis-aligned rectangle in world units, closed on all sides.
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool operator==(const Rect&) const = default;
};

struct WorldSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  int width = 3;
  int height = 3;
  std::vector<Rect> static_obstacles;
  std::optional<Rect> static_goal;

  /// Throws std::invalid_argument when bounds, dimensions or rectangles are bad.
  void validate() const;
};

/// Affine map between world coordinates and fractional grid coordinates.
/// Grid point (i, j) sits at the center of cell (i, j); the outermost grid
/// points lie exactly on the world bounds.
class GridTransform {
 public:
  GridTransform() = default;
  GridTransform(double x_min, double x_max, double y_min, double y_max, int width, int height);
  explicit GridTransform(const WorldSpec& w);
  /// Unit-spaced transform where grid and world coordinates coincide.
  static GridTransform unit(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  double cell_dx() const { return (x_max_ - x_min_) / (width_ - 1); }
  double cell_dy() const { return (y_max_ - y_min_) / (height_ - 1); }

  Eigen::Vector2d world_to_grid(double x, double y) const;
  Eigen::Vector2d grid_to_world(double i, double j) const;
  /// World coordinates of the center of cell (i, j).
  Eigen::Vector2d cell_center(int i, int j) const;

  /// Cell whose center is nearest to (x, y), clamped into the grid.
  struct CellHit {
    int i = 0;
    int j = 0;
    bool inside = true;
  };
  CellHit locate(double x, double y) const;

  bool operator==(const GridTransform&) const = default;

 private:
  double x_min_ = 0.0;
  double x_max_ = 1.0;
  double y_min_ = 0.0;
  double y_max_ = 1.0;
  int width_ = 2;
  int height_ = 2;
};

enum class CellState : std::uint8_t { Free, Goal, Unsafe };

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(GridTransform transform, CellState fill = CellState::Free);

  int width() const { return transform_.width(); }
  int height() const { return transform_.height(); }
  const GridTransform& transform() const { return transform_; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(width()) + static_cast<std::size_t>(i);
  }
  CellState at(int i, int j) const { return cells_[index(i, j)]; }
  void set(int i, int j, CellState s) { cells_[index(i, j)] = s; }
  const std::vector<CellState>& cells() const { return cells_; }

  std::size_t count(CellState s) const;
  void mark_border_unsafe();
  bool is_border(int i, int j) const {
    return i == 0 || j == 0 || i == width() - 1 || j == height() - 1;
  }

  /// State of the cell containing a world point; points outside the world are Unsafe.
  CellState state_at_world(double x, double y) const;

  std::uint64_t hash() const;
  bool operator==(const OccupancyGrid&) const = default;

 private:
  GridTransform transform_;
  std::vector<CellState> cells_;
};

/// Unit-spaced w×h grid: Unsafe border, random rectangles covering `fraction`
/// of the cells, and a Free-ringed 2×2 Goal block at the center.
OccupancyGrid random_obstacle_grid(int width, int height, double fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Errors

class NoGoalCell : public std::runtime_error {
 public:
  explicit NoGoalCell(std::optional<std::size_t> epoch = std::nullopt);
  std::optional<std::size_t> epoch() const { return epoch_; }

 private:
  std::optional<std::size_t> epoch_;
};

class EmptyGoalIntersection : public std::runtime_error {
 public:
  explicit EmptyGoalIntersection(std::size_t epoch);
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

struct SolveStats {
  int iterations = 0;
  double final_residual = 0.0;
  double wall_time = 0.0;  // seconds
};

class NonConverged : public std::runtime_error {
 public:
  NonConverged(SolveStats stats, std::optional<std::size_t> epoch = std::nullopt);
  const SolveStats& stats() const { return stats_; }
  std::optional<std::size_t> epoch() const { return epoch_; }

 private:
  SolveStats stats_;
  std::optional<std::size_t> epoch_;
};

// ---------------------------------------------------------------------------
// Constraint schedule

enum class RegionSource { Conjunct, StaticObstacle, StaticGoal, Border };

/// Which input claimed how many cells of an epoch (before conflict resolution).
struct RegionProvenance {
  RegionSource source = RegionSource::Conjunct;
  std::size_t index = 0;  // conjunct or rectangle index
  CellState state = CellState::Unsafe;
  std::size_t cells = 0;
};

struct Epoch {
  double t_start = 0.0;
  double t_end = 0.0;
  OccupancyGrid occupancy;
  std::vector<RegionProvenance> provenance;
};

struct ConstraintSchedule {
  std::vector<Epoch> epochs;
  double horizon = 0.0;

  /// Epochs are half-open [t_start, t_end) except the last, which is closed.
  std::size_t epoch_index_at(double t) const;
};

/// Rasterizes the formula (if any) and the world's static regions into one
/// occupancy grid per epoch. Throws NoGoalCell or EmptyGoalIntersection.
ConstraintSchedule compile_schedule(const std::optional<stl::Formula>& formula, const WorldSpec& world,
                                    double horizon);

/// Cells whose center satisfies a conjunction of literals.
std::vector<bool> rasterize(const std::vector<stl::Literal>& body, const GridTransform& t);
std::vector<bool> rasterize(const Rect& r, const GridTransform& t);

// ---------------------------------------------------------------------------
// Laplace solve

enum class RelaxationMethod { Jacobi, GaussSeidel, Sor };
enum class SweepOrder { Forward, Reverse };

struct SolverParams {
  double omega = 1.8;
  double tol = 1e-6;
  int max_iters = 50000;
  RelaxationMethod method = RelaxationMethod::Sor;
  SweepOrder order = SweepOrder::Forward;

  /// Throws std::invalid_argument for tol <= 0, max_iters < 0 or SOR omega outside [1, 2).
  void validate() const;
};

std::string to_string(RelaxationMethod m);
RelaxationMethod relaxation_method_from_string(const std::string& s);

class PotentialField {
 public:
  PotentialField(OccupancyGrid occupancy, std::vector<double> values, SolveStats stats);

  const OccupancyGrid& occupancy() const { return occupancy_; }
  const GridTransform& transform() const { return occupancy_.transform(); }
  int width() const { return occupancy_.width(); }
  int height() const { return occupancy_.height(); }
  const SolveStats& stats() const { return stats_; }

  double value(int i, int j) const { return values_[occupancy_.index(i, j)]; }
  /// Finite-difference gradient in world units.
  Eigen::Vector2d gradient(int i, int j) const {
    const auto k = occupancy_.index(i, j);
    return {grad_x_[k], grad_y_[k]};
  }
  const std::vector<double>& values() const { return values_; }

  /// Largest |V - mean of 4 neighbors| over Free cells.
  double harmonic_residual() const;

 private:
  OccupancyGrid occupancy_;
  std::vector<double> values_;
  std::vector<double> grad_x_;
  std::vector<double> grad_y_;
  SolveStats stats_;
};

/// Relaxation solve with V = 0 on Goal and V = 1 on Unsafe cells. Throws
/// NoGoalCell, NonConverged, or std::invalid_argument for bad parameters.
PotentialField solve(const OccupancyGrid& occupancy, const SolverParams& params = {});

/// One field per epoch; epochs with identical occupancy share a solve.
struct SolvedSchedule {
  std::vector<std::shared_ptr<const PotentialField>> fields;

  const PotentialField& at(std::size_t epoch) const { return *fields.at(epoch); }
  std::size_t size() const { return fields.size(); }
};

SolvedSchedule solve_schedule(const ConstraintSchedule& schedule, const SolverParams& params = {});

struct FieldSample {
  double V = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  bool clamped = false;  // query was outside the world and was clamped
  bool flat = false;     // |grad| < 1e-12 while 0 < V < 1
};

/// Bilinear interpolation of V and of each gradient component.
FieldSample sample(const PotentialField& field, double x, double y);

}  // namespace hclbf::field
