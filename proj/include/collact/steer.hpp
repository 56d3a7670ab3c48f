#pragma once

// Gradient-descent firm steered by an adaptive collective. Each round the
// collective sees theta_t and supplies a mean gradient g' so that the mixture
// alpha g' + (1 - alpha) g_P0(theta_t) equals alpha xi_t (theta_t - theta*),
// which contracts the distance to the target by (1 - eta alpha xi_t).
//
// g_P0 is computed exactly from the base distribution; the collective's view
// of the base data is idealized.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "collact/riskmin.hpp"

namespace collact {

struct LearnerConfig {
  double step_size = 0.1;  // eta
  std::size_t horizon = 10;  // T
  Vector theta_init;
};

enum class ControlMode { byzantine, data };

const char* to_string(ControlMode mode);
ControlMode control_mode_from_string(const std::string& name);

// Redirect scale per round; constant xi_gc when empty.
using XiSchedule = std::function<double(std::size_t step)>;

struct ControlPolicy {
  double alpha = 0.1;
  Vector theta_target;
  double xi_gc = 1.0;
  ControlMode mode = ControlMode::byzantine;
  XiSchedule schedule;

  double xi_at(std::size_t step) const { return schedule ? schedule(step) : xi_gc; }
};

// Base expected gradient g_P0(theta) for arbitrary (possibly nonconvex) losses.
using BaseGradient = std::function<Vector(const Vector& theta)>;

// -((1 - alpha) / alpha) g_P0(theta) + xi (theta - theta*).
Vector redirect_gradient(const Vector& g_p0_at_theta, const Vector& theta, double alpha, double xi,
                         const Vector& theta_target);

// Single squared-loss atom whose gradient x'(x'^T theta - y') equals v:
// x' = v / ||v||, y' = x'^T theta - ||v||. The zero vector is realized by a
// zero-residual atom on the first axis.
Atom realize_gradient_squared_loss(const Vector& target_gradient, const Vector& theta);

struct Trajectory {
  std::vector<Vector> thetas;              // theta_0 .. theta_T
  std::vector<double> distances;           // ||theta_t - theta*||
  std::vector<double> contraction_factors; // distances[t + 1] / distances[t], 0 when distances[t] = 0
  std::vector<double> applied_xi;          // xi used at each step
};

// Byzantine mode with an arbitrary base gradient.
Trajectory run_steered_descent(const BaseGradient& base_gradient, const LearnerConfig& learner,
                               const ControlPolicy& policy);

// GLM base loss; data mode realizes each redirect with one squared-loss atom
// (throws UnsupportedModeError for other losses).
Trajectory run_steered_descent(const LossSpec& loss, const DataDistribution& p0,
                               const LearnerConfig& learner, const ControlPolicy& policy);

// Throws InfeasiblePolicyError unless 0 < xi < 1 / (alpha eta).
void check_policy_feasible(double alpha, double eta, double xi);

struct ContractionAudit {
  std::size_t violations = 0;
  double max_ratio_error = 0.0;   // max |ratio_t - (1 - eta alpha xi_t)| over resolvable steps
  double cumulative_bound = 0.0;  // prod_t (1 - eta alpha xi_t) * ||theta_0 - theta*||
  double final_distance = 0.0;
  double cumulative_excess = 0.0; // max(0, final - bound)
  bool passed() const { return violations == 0; }
};

// Checks every per-step ratio against 1 - eta alpha xi_t within `ratio_tol` and
// the cumulative bound within `bound_rel_tol` of the starting distance (float
// rounding in the iterate update). Steps whose distance is near the rounding
// floor of the iterates (1e-13 |theta|) get a proportionally wider ratio
// tolerance.
ContractionAudit contraction_audit(const Trajectory& traj, double eta, double alpha,
                                   const std::vector<double>& xi_schedule,
                                   double ratio_tol = 1e-9, double bound_rel_tol = 1e-12);

struct PathCheck {
  double max_gradient_norm = 0.0;
  std::size_t argmax_index = 0;  // segment grid index, 0 = theta0
};

// Max of ||g_P0|| over lambda theta0 + (1 - lambda) theta* on a uniform grid.
PathCheck path_gradient_check(const BaseGradient& base_gradient, const Vector& theta0,
                              const Vector& theta_target, std::size_t points = 101);

}  // namespace collact
