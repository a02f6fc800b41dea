#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include "hclbf/field.hpp"

namespace hclbf::field {

namespace {

double neighbor_mean(const std::vector<double>& v, std::size_t k, std::size_t stride) {
  return 0.25 * (v[k - 1] + v[k + 1] + v[k - stride] + v[k + stride]);
}

double max_residual(const std::vector<double>& v, const std::vector<std::size_t>& free_cells, std::size_t stride) {
  double r = 0.0;
  for (std::size_t k : free_cells) r = std::max(r, std::abs(v[k] - neighbor_mean(v, k, stride)));
  return r;
}

void validate(const OccupancyGrid& occ, const SolverParams& p) {
  p.validate();
  for (int i = 0; i < occ.width(); ++i) {
    for (int j : {0, occ.height() - 1}) {
      if (occ.at(i, j) == CellState::Free) throw std::invalid_argument("grid border cells must not be Free");
    }
  }
  for (int j = 0; j < occ.height(); ++j) {
    for (int i : {0, occ.width() - 1}) {
      if (occ.at(i, j) == CellState::Free) throw std::invalid_argument("grid border cells must not be Free");
    }
  }
}

// Central differences inside, one-sided on the outermost row/column.
double difference(const std::vector<double>& v, std::size_t k, int pos, int extent, std::size_t stride) {
  if (pos == 0) return v[k + stride] - v[k];
  if (pos == extent - 1) return v[k] - v[k - stride];
  return 0.5 * (v[k + stride] - v[k - stride]);
}

}  // namespace

void SolverParams::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
  if (method == RelaxationMethod::Sor && !(omega >= 1.0 && omega < 2.0)) {
    throw std::invalid_argument("SOR relaxation factor must lie in [1, 2)");
  }
}

std::string to_string(RelaxationMethod m) {
  switch (m) {
    case RelaxationMethod::Jacobi: return "jacobi";
    case RelaxationMethod::GaussSeidel: return "gauss-seidel";
    case RelaxationMethod::Sor: return "sor";
  }
  return "sor";
}

RelaxationMethod relaxation_method_from_string(const std::string& s) {
  if (s == "jacobi") return RelaxationMethod::Jacobi;
  if (s == "gauss-seidel" || s == "gs") return RelaxationMethod::GaussSeidel;
  if (s == "sor") return RelaxationMethod::Sor;
  throw std::invalid_argument("unknown relaxation method '" + s + "'");
}

PotentialField::PotentialField(OccupancyGrid occupancy, std::vector<double> values, SolveStats stats)
    : occupancy_(std::move(occupancy)), values_(std::move(values)), stats_(stats) {
  const int w = width();
  const int h = height();
  const auto stride = static_cast<std::size_t>(w);
  const double dx = transform().cell_dx();
  const double dy = transform().cell_dy();
  grad_x_.assign(values_.size(), 0.0);
  grad_y_.assign(values_.size(), 0.0);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const std::size_t k = occupancy_.index(i, j);
      grad_x_[k] = difference(values_, k, i, w, 1) / dx;
      grad_y_[k] = difference(values_, k, j, h, stride) / dy;
    }
  }
}

double PotentialField::harmonic_residual() const {
  const auto stride = static_cast<std::size_t>(width());
  double r = 0.0;
  for (int j = 1; j + 1 < height(); ++j) {
    for (int i = 1; i + 1 < width(); ++i) {
      if (occupancy_.at(i, j) != CellState::Free) continue;
      const std::size_t k = occupancy_.index(i, j);
      r = std::max(r, std::abs(values_[k] - neighbor_mean(values_, k, stride)));
    }
  }
  return r;
}

PotentialField solve(const OccupancyGrid& occupancy, const SolverParams& params) {
  validate(occupancy, params);
  if (occupancy.count(CellState::Goal) == 0) throw NoGoalCell();

  const auto start = std::chrono::steady_clock::now();
  const auto stride = static_cast<std::size_t>(occupancy.width());
  const auto& cells = occupancy.cells();

  std::vector<double> v(cells.size());
  std::vector<std::size_t> free_cells;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    v[k] = cells[k] == CellState::Goal ? 0.0 : 1.0;
    if (cells[k] == CellState::Free) free_cells.push_back(k);
  }
  if (params.order == SweepOrder::Reverse) std::reverse(free_cells.begin(), free_cells.end());

  const double omega = params.method == RelaxationMethod::Sor ? params.omega : 1.0;
  SolveStats stats;
  bool converged = free_cells.empty();
  std::vector<double> scratch;
  if (params.method == RelaxationMethod::Jacobi) scratch = v;

  while (!converged && stats.iterations < params.max_iters) {
    double max_update = 0.0;
    if (params.method == RelaxationMethod::Jacobi) {
      for (std::size_t k : free_cells) {
        const double next = neighbor_mean(v, k, stride);
        max_update = std::max(max_update, std::abs(next - v[k]));
        scratch[k] = next;
      }
      std::swap(v, scratch);
    } else {
      for (std::size_t k : free_cells) {
        const double update = omega * (neighbor_mean(v, k, stride) - v[k]);
        v[k] += update;
        max_update = std::max(max_update, std::abs(update));
      }
    }
    ++stats.iterations;
    stats.final_residual = max_update;
    if (max_update < params.tol) {
      // The sweep has settled; also require the fixed-point residual itself to be below tol.
      stats.final_residual = max_residual(v, free_cells, stride);
      converged = stats.final_residual < params.tol;
      if (params.method == RelaxationMethod::Jacobi) scratch = v;
    }
  }
  stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!converged) throw NonConverged(stats);

  for (std::size_t k : free_cells) v[k] = std::clamp(v[k], 0.0, 1.0);
  return PotentialField(occupancy, std::move(v), stats);
}

SolvedSchedule solve_schedule(const ConstraintSchedule& schedule, const SolverParams& params) {
  SolvedSchedule out;
  std::unordered_multimap<std::uint64_t, std::shared_ptr<const PotentialField>> cache;
  for (std::size_t e = 0; e < schedule.epochs.size(); ++e) {
    const OccupancyGrid& occ = schedule.epochs[e].occupancy;
    const std::uint64_t key = occ.hash();
    std::shared_ptr<const PotentialField> field;
    auto [lo, hi] = cache.equal_range(key);
    for (auto it = lo; it != hi; ++it) {
      if (it->second->occupancy() == occ) {
        field = it->second;
        break;
      }
    }
    if (!field) {
      try {
        field = std::make_shared<const PotentialField>(solve(occ, params));
      } catch (const NoGoalCell&) {
        throw NoGoalCell(e);
      } catch (const NonConverged& nc) {
        throw NonConverged(nc.stats(), e);
      }
      cache.emplace(key, field);
    }
    out.fields.push_back(std::move(field));
  }
  return out;
}

FieldSample sample(const PotentialField& field, double x, double y) {
  const GridTransform& t = field.transform();
  const Eigen::Vector2d g = t.world_to_grid(x, y);
  const double max_i = t.width() - 1.0;
  const double max_j = t.height() - 1.0;

  FieldSample s;
  s.clamped = !(g.x() >= 0.0 && g.x() <= max_i && g.y() >= 0.0 && g.y() <= max_j);
  const double gi = std::clamp(g.x(), 0.0, max_i);
  const double gj = std::clamp(g.y(), 0.0, max_j);
  const int i0 = std::min(static_cast<int>(std::floor(gi)), t.width() - 2);
  const int j0 = std::min(static_cast<int>(std::floor(gj)), t.height() - 2);
  const double fx = gi - i0;
  const double fy = gj - j0;

  const double w00 = (1.0 - fx) * (1.0 - fy);
  const double w10 = fx * (1.0 - fy);
  const double w01 = (1.0 - fx) * fy;
  const double w11 = fx * fy;

  s.V = w00 * field.value(i0, j0) + w10 * field.value(i0 + 1, j0) + w01 * field.value(i0, j0 + 1) +
        w11 * field.value(i0 + 1, j0 + 1);
  s.grad = w00 * field.gradient(i0, j0) + w10 * field.gradient(i0 + 1, j0) + w01 * field.gradient(i0, j0 + 1) +
           w11 * field.gradient(i0 + 1, j0 + 1);
  s.flat = s.grad.norm() < 1e-12 && s.V > 0.0 && s.V < 1.0;
  return s;
}

}  // namespace hclbf::field
