#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace hclbf::filter {

struct FilterParams {
  double k_alpha = 1.0;         // barrier gain, 1/s
  double alpha_adm = 0.1;       // admittance gain, velocity per unit force
  double grad_epsilon = 1e-9;   // below this |grad V| the constraint direction is undefined
  std::optional<double> max_speed;  // optional post-projection speed clamp

  void validate() const;
};

enum FilterFlag : std::uint8_t {
  kNoFlags = 0,
  kProjected = 1u << 0,
  kFlatGradientStop = 1u << 1,
  kClamped = 1u << 2,
  kOutOfBounds = 1u << 3,  // field sample was clamped to the world boundary
};

/// "P|S|C|O" style encoding used in trajectory files; empty for no flags.
std::string flags_to_string(std::uint8_t flags);
std::uint8_t flags_from_string(const std::string& s);

struct BarrierCheck {
  bool satisfied = false;
  double lhs = 0.0;  // grad^T u
  double rhs = 0.0;  // -k_alpha V
};

struct FilterDecision {
  Eigen::Vector2d nominal_u = Eigen::Vector2d::Zero();
  double V = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  double lhs = 0.0;
  double rhs = 0.0;
  bool violated = false;
  Eigen::Vector2d output_u = Eigen::Vector2d::Zero();
  std::uint8_t flags = kNoFlags;

  bool has(FilterFlag f) const { return (flags & f) != 0; }
};

class NonFiniteInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// u = alpha_adm * F.
Eigen::Vector2d admittance(const Eigen::Vector2d& force, double alpha_adm);

/// Tests grad^T u <= -k_alpha V.
BarrierCheck check_barrier(const Eigen::Vector2d& u, double V, const Eigen::Vector2d& grad, double k_alpha);

/// Closest velocity (Euclidean) satisfying the barrier inequality. The
/// half-space projection is closed form; when |grad| <= grad_epsilon and the
/// nominal command violates, the output is zero with kFlatGradientStop.
FilterDecision project(const Eigen::Vector2d& u, double V, const Eigen::Vector2d& grad, double k_alpha,
                       double grad_epsilon);

/// Shrinks output_u to max_speed when doing so keeps the barrier inequality.
void apply_speed_clamp(FilterDecision& d, double max_speed, double k_alpha);

/// project() followed by the optional speed clamp.
FilterDecision filter_velocity(const Eigen::Vector2d& u, double V, const Eigen::Vector2d& grad,
                               const FilterParams& params);

}  // namespace hclbf::filter
