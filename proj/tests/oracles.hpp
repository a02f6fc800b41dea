#pragma once

// Independent reference implementations used by unit and acceptance tests.
// None of these call into the code under test beyond plain data types.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hclbf/field.hpp"
#include "hclbf/stl.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Dirichlet Laplace system solved by dense LU.

inline std::vector<double> dense_laplace(const hclbf::field::OccupancyGrid& occ) {
  using hclbf::field::CellState;
  const int w = occ.width();
  const int h = occ.height();
  std::vector<int> unknown(static_cast<std::size_t>(w) * h, -1);
  int n = 0;
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      if (occ.at(i, j) == CellState::Free) unknown[occ.index(i, j)] = n++;
    }
  }
  std::vector<double> out(unknown.size());
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      out[occ.index(i, j)] = occ.at(i, j) == CellState::Goal ? 0.0 : 1.0;
    }
  }
  if (n == 0) return out;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const int r = unknown[occ.index(i, j)];
      if (r < 0) continue;
      a(r, r) = 4.0;
      for (int k = 0; k < 4; ++k) {
        const int ni = i + di[k];
        const int nj = j + dj[k];
        // Off-grid neighbors count as Unsafe (V = 1).
        if (ni < 0 || nj < 0 || ni >= w || nj >= h) {
          b(r) += 1.0;
          continue;
        }
        const int c = unknown[occ.index(ni, nj)];
        if (c >= 0) {
          a(r, c) -= 1.0;
        } else {
          b(r) += occ.at(ni, nj) == CellState::Goal ? 0.0 : 1.0;
        }
      }
    }
  }
  const Eigen::VectorXd x = a.partialPivLu().solve(b);
  for (std::size_t k = 0; k < unknown.size(); ++k) {
    if (unknown[k] >= 0) out[k] = x(unknown[k]);
  }
  return out;
}

/// Unit grid, 3..12 per side, Unsafe border, ~8% Goal and ~22% Unsafe interior cells.
inline hclbf::field::OccupancyGrid random_small_grid(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(3, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    const int w = dim(rng);
    const int h = dim(rng);
    hclbf::field::OccupancyGrid occ(hclbf::field::GridTransform::unit(w, h));
    occ.mark_border_unsafe();
    bool goal = false;
    for (int j = 1; j < h - 1; ++j) {
      for (int i = 1; i < w - 1; ++i) {
        const double r = u(rng);
        if (r < 0.08) {
          occ.set(i, j, hclbf::field::CellState::Goal);
          goal = true;
        } else if (r < 0.3) {
          occ.set(i, j, hclbf::field::CellState::Unsafe);
        }
      }
    }
    if (goal) return occ;
  }
}

// ---------------------------------------------------------------------------
// Nearest feasible velocity by exhaustive search on a polar grid centered at
// u, using only the feasibility test g.c <= -kV. Candidate distance to u is
// the ring radius, so the first ring with a feasible candidate brackets the
// optimal distance D; on that ring the feasible arc is symmetric about the
// optimal direction, and its midpoint is the estimate. Each further pass
// searches the bracket [D_lo, r] and the arc around the estimate.

struct PolarSearch {
  int radii = 1000;
  int angles = 1000;
  int passes = 1;
};

inline Eigen::Vector2d brute_force_projection(const Eigen::Vector2d& u, double V, const Eigen::Vector2d& g,
                                              double k, PolarSearch cfg = {}) {
  const double rhs = -k * V;
  auto feasible = [&](const Eigen::Vector2d& c) { return g.dot(c) <= rhs; };
  if (feasible(u)) return u;
  double r_lo = 0.0;
  double r_hi = 1.01 * (u.norm() + std::abs(rhs) / g.norm()) + 1e-12;
  double center = 0.0;
  double half = M_PI;
  Eigen::Vector2d best = Eigen::Vector2d::Constant(std::nan(""));
  std::vector<Eigen::Vector2d> dirs(static_cast<std::size_t>(cfg.angles) + 1);
  for (int pass = 0; pass < cfg.passes; ++pass) {
    const double dth = 2.0 * half / cfg.angles;
    for (int b = 0; b <= cfg.angles; ++b) {
      const double th = center - half + dth * b;
      dirs[static_cast<std::size_t>(b)] = {std::cos(th), std::sin(th)};
    }
    const double h = (r_hi - r_lo) / cfg.radii;
    int ring = -1;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    // The last angle duplicates the first on the full circle.
    const int nb = half < M_PI ? cfg.angles : cfg.angles - 1;
    for (int a = 0; a <= cfg.radii && ring < 0; ++a) {
      const double r = r_lo + h * a;
      for (int b = 0; b <= nb; ++b) {
        if (!feasible(u + r * dirs[static_cast<std::size_t>(b)])) continue;
        sum += dirs[static_cast<std::size_t>(b)];
        ring = a;
      }
    }
    if (ring < 0) break;
    const double r = r_lo + h * ring;
    // Mean direction of the feasible candidates: the arc midpoint, wrap-safe.
    const double mid = std::atan2(sum.y(), sum.x());
    best = u + r * sum.normalized();
    // The previous ring held no feasible grid angle, so D > (r - h) cos(dth / 2).
    const double d_lo = std::max(r_lo, (r - h) * std::cos(0.5 * dth));
    r_lo = std::min(d_lo, r);
    r_hi = r;
    half = std::min(M_PI, std::acos(std::clamp(r_lo / r, -1.0, 1.0)) + dth);
    center = mid;
  }
  return best;
}

struct ProjectionInstance {
  Eigen::Vector2d u;
  double V = 0.0;
  Eigen::Vector2d grad;
  double k = 1.0;
};

/// Violated barrier instance with the nearest feasible point at most 0.9|u|
/// from u.
inline ProjectionInstance random_violated_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> speed(0.05, 2.0);
  std::uniform_real_distribution<double> gnorm(0.01, 5.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> gain(0.05, 3.0);
  while (true) {
    ProjectionInstance p;
    const double a = angle(rng);
    const double b = angle(rng);
    p.u = speed(rng) * Eigen::Vector2d(std::cos(a), std::sin(a));
    p.grad = gnorm(rng) * Eigen::Vector2d(std::cos(b), std::sin(b));
    p.V = unit(rng);
    p.k = gain(rng);
    const double excess = p.grad.dot(p.u) + p.k * p.V;
    if (!(excess > 0.0)) continue;
    if (excess / p.grad.norm() > 0.9 * p.u.norm()) continue;
    return p;
  }
}

// ---------------------------------------------------------------------------
// Per-sample monitor: a sample is in [t1, t2] iff its distance to the
// interval is at most half a period.

inline bool literal_holds(const hclbf::stl::Literal& l, double x, double y) {
  using hclbf::stl::Relation;
  const double v = l.atom.axis == hclbf::stl::Axis::X ? x : y;
  const double c = l.atom.threshold;
  bool r = false;
  if (l.atom.relation == Relation::GE) r = !(v < c);
  if (l.atom.relation == Relation::GT) r = !(v <= c);
  if (l.atom.relation == Relation::EQ) r = !(v < c) && !(v > c);
  return l.negated != r;
}

struct BruteVerdict {
  bool satisfied = true;
  std::vector<bool> per_conjunct;
  std::vector<std::optional<double>> times;
};

inline BruteVerdict brute_monitor(const hclbf::stl::Formula& f, const std::vector<hclbf::stl::Sample>& s) {
  const double p = (s.back().t - s.front().t) / static_cast<double>(s.size() - 1);
  BruteVerdict v;
  for (const auto& c : f.conjuncts) {
    const bool always = c.op == hclbf::stl::TemporalOp::Always;
    std::vector<bool> holds;
    std::vector<double> times;
    for (const auto& x : s) {
      const double dist = std::max({0.0, c.t1 - x.t, x.t - c.t2});
      if (dist > 0.5 * p) continue;
      bool all = true;
      for (const auto& l : c.body) all = all && literal_holds(l, x.x, x.y);
      holds.push_back(all);
      times.push_back(x.t);
    }
    bool sat = always;
    std::optional<double> when;
    for (std::size_t k = 0; k < holds.size(); ++k) {
      if (holds[k] != always) {
        sat = !always;
        when = times[k];
        break;
      }
    }
    v.per_conjunct.push_back(sat);
    v.times.push_back(when);
    v.satisfied = v.satisfied && sat;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Random fragment formulas and signals.

inline double random_threshold(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_real_distribution<double> real(-50.0, 50.0);
  std::uniform_int_distribution<int> small(-20, 20);
  switch (kind(rng)) {
    case 0: return static_cast<double>(small(rng));
    case 1: return small(rng) * 0.25;
    case 2: return real(rng);
    default: return real(rng) * 1e-7;
  }
}

inline hclbf::stl::Formula random_formula(std::mt19937_64& rng, double max_t = 20.0, int max_conjuncts = 4,
                                          int max_literals = 4) {
  using namespace hclbf::stl;
  std::uniform_int_distribution<int> n_conj(1, max_conjuncts);
  std::uniform_int_distribution<int> n_lit(1, max_literals);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> rel(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Formula f;
  const int nc = n_conj(rng);
  for (int c = 0; c < nc; ++c) {
    TemporalConjunct tc;
    tc.op = coin(rng) ? TemporalOp::Always : TemporalOp::Eventually;
    double a = unit(rng) * max_t;
    double b = unit(rng) * max_t;
    if (coin(rng)) {
      a = std::floor(a);
      b = std::ceil(b);
    }
    if (a > b) std::swap(a, b);
    if (!(a < b)) b = a + 1.0;
    tc.t1 = a;
    tc.t2 = std::min(b, max_t);
    if (!(tc.t1 < tc.t2)) tc.t1 = tc.t2 - 0.5;
    const int nl = n_lit(rng);
    for (int l = 0; l < nl; ++l) {
      Literal lit;
      lit.atom.axis = coin(rng) ? Axis::X : Axis::Y;
      lit.atom.relation = static_cast<Relation>(rel(rng));
      lit.atom.threshold = random_threshold(rng);
      lit.negated = coin(rng) == 1;
      tc.body.push_back(lit);
    }
    f.conjuncts.push_back(tc);
  }
  return f;
}

/// Piecewise random walk on a quarter-integer lattice so that equality and
/// boundary cases are hit.
inline std::vector<hclbf::stl::Sample> random_signal(std::mt19937_64& rng, double horizon, double period) {
  std::uniform_int_distribution<int> step(-2, 2);
  std::uniform_int_distribution<int> start(-20, 20);
  std::vector<hclbf::stl::Sample> s;
  const int n = static_cast<int>(std::ceil(horizon / period - 1e-9)) + 1;
  double x = start(rng) * 0.25;
  double y = start(rng) * 0.25;
  for (int k = 0; k < n; ++k) {
    s.push_back({k * period, x, y});
    x += step(rng) * 0.25;
    y += step(rng) * 0.25;
  }
  return s;
}

/// Formula whose thresholds and windows are drawn to interact with a lattice signal.
inline hclbf::stl::Formula random_monitor_formula(std::mt19937_64& rng, double horizon) {
  auto f = random_formula(rng, horizon, 3, 3);
  std::uniform_int_distribution<int> q(-24, 24);
  for (auto& c : f.conjuncts) {
    for (auto& l : c.body) l.atom.threshold = q(rng) * 0.25;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Value iteration for deterministic grid MDPs with the 8-action move set.

struct GridMdp {
  int width = 0;
  int height = 0;
  std::vector<bool> goal;
  Eigen::Vector2d goal_point = Eigen::Vector2d::Zero();
};

/// Q*(s, a) for reward -|next - goal| - 0.01 (+10 at goal, -10 off-grid),
/// terminal goal states.
inline std::vector<std::array<double, 8>> value_iteration(const GridMdp& m, double gamma, int sweeps = 2000) {
  const int di[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  const int dj[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  const std::size_t n = static_cast<std::size_t>(m.width) * m.height;
  std::vector<std::array<double, 8>> q(n);
  std::vector<double> v(n, 0.0);
  for (int it = 0; it < sweeps; ++it) {
    for (std::size_t s = 0; s < n; ++s) {
      const int i = static_cast<int>(s % m.width);
      const int j = static_cast<int>(s / m.width);
      for (int a = 0; a < 8; ++a) {
        int ni = i + di[a];
        int nj = j + dj[a];
        bool in = true;
        if (ni < 0 || nj < 0 || ni >= m.width || nj >= m.height) {
          ni = i;
          nj = j;
          in = false;
        }
        const std::size_t t = static_cast<std::size_t>(nj) * m.width + ni;
        const double dist = (Eigen::Vector2d(ni, nj) - m.goal_point).norm();
        double r = -dist - 0.01;
        if (m.goal[t]) r += 10.0;
        if (!in) r -= 10.0;
        q[s][a] = m.goal[t] ? r : r + gamma * v[t];
      }
    }
    for (std::size_t s = 0; s < n; ++s) v[s] = *std::max_element(q[s].begin(), q[s].end());
  }
  return q;
}

}  // namespace oracle
