#include "hclbf/filter.hpp"

#include <cmath>

namespace hclbf::filter {

namespace {

bool finite(const Eigen::Vector2d& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

constexpr double kFeasibilityTol = 1e-9;

}  // namespace

void FilterParams::validate() const {
  if (!(k_alpha > 0.0) || !std::isfinite(k_alpha)) throw std::invalid_argument("k_alpha must be positive");
  if (!(alpha_adm > 0.0) || !std::isfinite(alpha_adm)) throw std::invalid_argument("alpha_adm must be positive");
  if (!(grad_epsilon >= 0.0)) throw std::invalid_argument("grad_epsilon must be non-negative");
  if (max_speed && !(*max_speed > 0.0)) throw std::invalid_argument("max_speed must be positive");
}

std::string flags_to_string(std::uint8_t flags) {
  std::string out;
  auto add = [&out](const char* s) {
    if (!out.empty()) out += '|';
    out += s;
  };
  if (flags & kProjected) add("P");
  if (flags & kFlatGradientStop) add("S");
  if (flags & kClamped) add("C");
  if (flags & kOutOfBounds) add("O");
  return out;
}

std::uint8_t flags_from_string(const std::string& s) {
  std::uint8_t flags = kNoFlags;
  for (char c : s) {
    switch (c) {
      case 'P': flags |= kProjected; break;
      case 'S': flags |= kFlatGradientStop; break;
      case 'C': flags |= kClamped; break;
      case 'O': flags |= kOutOfBounds; break;
      case '|': break;
      default: throw std::invalid_argument("unknown filter flag '" + std::string(1, c) + "'");
    }
  }
  return flags;
}

Eigen::Vector2d admittance(const Eigen::Vector2d& force, double alpha_adm) { return alpha_adm * force; }

BarrierCheck check_barrier(const Eigen::Vector2d& u, double V, const Eigen::Vector2d& grad, double k_alpha) {
  BarrierCheck c;
  c.lhs = grad.dot(u);
  c.rhs = -k_alpha * V;
  c.satisfied = c.lhs <= c.rhs;
  return c;
}

FilterDecision project(const Eigen::Vector2d& u, double V, const Eigen::Vector2d& grad, double k_alpha,
                       double grad_epsilon) {
  if (!finite(u) || !finite(grad) || !std::isfinite(V)) {
    throw NonFiniteInput("filter input contains NaN or Inf");
  }
  FilterDecision d;
  d.nominal_u = u;
  d.V = V;
  d.grad = grad;
  const BarrierCheck check = check_barrier(u, V, grad, k_alpha);
  d.lhs = check.lhs;
  d.rhs = check.rhs;
  d.violated = !check.satisfied;
  if (!d.violated) {
    d.output_u = u;
    return d;
  }

  const double g2 = grad.squaredNorm();
  if (std::sqrt(g2) <= grad_epsilon) {
    d.output_u = Eigen::Vector2d::Zero();
    d.flags |= kFlatGradientStop;
    return d;
  }
  d.output_u = u - ((check.lhs + k_alpha * V) / g2) * grad;
  d.flags |= kProjected;
  return d;
}

void apply_speed_clamp(FilterDecision& d, double max_speed, double k_alpha) {
  const double speed = d.output_u.norm();
  if (!(speed > max_speed)) return;
  const Eigen::Vector2d shrunk = d.output_u * (max_speed / speed);
  // Shrinking scales grad^T u toward zero, which can break an active
  // constraint with -k_alpha V < 0; keep the unclamped command then.
  if (d.grad.dot(shrunk) <= -k_alpha * d.V + kFeasibilityTol) {
    d.output_u = shrunk;
    d.flags |= kClamped;
  }
}

FilterDecision filter_velocity(const Eigen::Vector2d& u, double V, const Eigen::Vector2d& grad,
                               const FilterParams& params) {
  FilterDecision d = project(u, V, grad, params.k_alpha, params.grad_epsilon);
  if (params.max_speed) apply_speed_clamp(d, *params.max_speed, params.k_alpha);
  return d;
}

}  // namespace hclbf::filter
