#include "collact/steer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "collact/error.hpp"

namespace collact {

const char* to_string(ControlMode mode) {
  return mode == ControlMode::byzantine ? "byzantine" : "data";
}

ControlMode control_mode_from_string(const std::string& name) {
  if (name == "byzantine") {
    return ControlMode::byzantine;
  }
  if (name == "data") {
    return ControlMode::data;
  }
  throw ConfigError("unknown control mode '" + name + "'");
}

Vector redirect_gradient(const Vector& g_p0_at_theta, const Vector& theta, double alpha, double xi,
                         const Vector& theta_target) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InfeasiblePolicyError("collective fraction must lie in (0, 1]");
  }
  return -((1.0 - alpha) / alpha) * g_p0_at_theta + xi * (theta - theta_target);
}

Atom realize_gradient_squared_loss(const Vector& target_gradient, const Vector& theta) {
  if (!target_gradient.allFinite()) {
    throw StructuralError("target gradient is not finite");
  }
  Atom atom;
  const double n = target_gradient.norm();
  if (n == 0.0) {
    atom.x = Vector::Zero(theta.size());
    atom.x[0] = 1.0;
    atom.y = atom.x.dot(theta);
  } else {
    atom.x = target_gradient / n;
    atom.y = atom.x.dot(theta) - n;
  }
  atom.weight = 1.0;
  return atom;
}

void check_policy_feasible(double alpha, double eta, double xi) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InfeasiblePolicyError("collective fraction must lie in (0, 1]");
  }
  if (!(eta > 0.0)) {
    throw InfeasiblePolicyError("step size must be positive");
  }
  const double cap = 1.0 / (alpha * eta);
  if (!(xi > 0.0 && xi < cap)) {
    throw InfeasiblePolicyError("redirect scale " + std::to_string(xi) + " outside (0, " +
                                std::to_string(cap) + ")");
  }
}

namespace {

// Shared loop; `collective_gradient` returns the collective's mean gradient
// at theta given the base gradient there and the round's redirect target.
template <typename CollectiveGradient>
Trajectory steer_loop(const BaseGradient& base_gradient, const LearnerConfig& learner,
                      const ControlPolicy& policy, CollectiveGradient collective_gradient) {
  if (learner.theta_init.size() != policy.theta_target.size()) {
    throw StructuralError("initial and target parameters differ in dimension");
  }
  for (std::size_t t = 0; t < learner.horizon; ++t) {
    check_policy_feasible(policy.alpha, learner.step_size, policy.xi_at(t));
  }
  Trajectory traj;
  traj.thetas.reserve(learner.horizon + 1);
  Vector theta = learner.theta_init;
  traj.thetas.push_back(theta);
  traj.distances.push_back((theta - policy.theta_target).norm());
  const double a = policy.alpha;
  for (std::size_t t = 0; t < learner.horizon; ++t) {
    const double xi = policy.xi_at(t);
    const Vector g0 = base_gradient(theta);
    const Vector redirect = redirect_gradient(g0, theta, a, xi, policy.theta_target);
    const Vector supplied = collective_gradient(g0, theta, redirect);
    const Vector mixture = a * supplied + (1.0 - a) * g0;
    theta = theta - learner.step_size * mixture;
    traj.thetas.push_back(theta);
    traj.applied_xi.push_back(xi);
    const double prev = traj.distances.back();
    const double dist = (theta - policy.theta_target).norm();
    traj.distances.push_back(dist);
    traj.contraction_factors.push_back(prev > 0.0 ? dist / prev : 0.0);
  }
  return traj;
}

}  // namespace

Trajectory run_steered_descent(const BaseGradient& base_gradient, const LearnerConfig& learner,
                               const ControlPolicy& policy) {
  if (policy.mode != ControlMode::byzantine) {
    throw UnsupportedModeError("data-mode steering needs a squared-loss base distribution");
  }
  return steer_loop(base_gradient, learner, policy,
                    [](const Vector&, const Vector&, const Vector& redirect) { return redirect; });
}

Trajectory run_steered_descent(const LossSpec& loss, const DataDistribution& p0,
                               const LearnerConfig& learner, const ControlPolicy& policy) {
  const BaseGradient base = [&](const Vector& theta) {
    return expected_gradient(loss, p0, theta);
  };
  if (policy.mode == ControlMode::byzantine) {
    return run_steered_descent(base, learner, policy);
  }
  if (loss.family != LossFamily::squared) {
    throw UnsupportedModeError("data-mode steering is implemented for squared loss only");
  }
  return steer_loop(base, learner, policy,
                    [&](const Vector&, const Vector& theta, const Vector& redirect) {
                      // The atom's full gradient includes lambda theta; realize the rest.
                      const Atom atom =
                          realize_gradient_squared_loss(redirect - loss.lambda * theta, theta);
                      return glm_gradient(loss, theta, atom);
                    });
}

ContractionAudit contraction_audit(const Trajectory& traj, double eta, double alpha,
                                   const std::vector<double>& xi_schedule, double ratio_tol,
                                   double bound_rel_tol) {
  ContractionAudit audit;
  if (traj.distances.empty()) {
    return audit;
  }
  const std::size_t steps = traj.distances.size() - 1;
  if (xi_schedule.size() < steps) {
    throw StructuralError("xi schedule shorter than the trajectory");
  }
  const double d0 = traj.distances.front();
  // Absolute rounding in the iterates is about eps * |theta|; once the distance
  // gets near that floor the measured ratio is noise, so widen the tolerance
  // in proportion.
  double scale = d0;
  for (const auto& th : traj.thetas) {
    scale = std::max(scale, th.norm());
  }
  const double floor = 1e-13 * scale;
  double bound = d0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double factor = 1.0 - eta * alpha * xi_schedule[t];
    bound *= factor;
    if (traj.distances[t] > 0.0) {
      const double err = std::abs(traj.contraction_factors[t] - factor);
      const double allowed = ratio_tol + floor / traj.distances[t];
      if (floor / traj.distances[t] <= ratio_tol) {
        audit.max_ratio_error = std::max(audit.max_ratio_error, err);
      }
      if (err > allowed) {
        ++audit.violations;
      }
    }
  }
  audit.cumulative_bound = bound;
  audit.final_distance = traj.distances.back();
  audit.cumulative_excess = std::max(0.0, audit.final_distance - bound);
  if (audit.final_distance > bound + bound_rel_tol * d0) {
    ++audit.violations;
  }
  return audit;
}

PathCheck path_gradient_check(const BaseGradient& base_gradient, const Vector& theta0,
                              const Vector& theta_target, std::size_t points) {
  if (points < 2) {
    throw StructuralError("path check needs at least two points");
  }
  PathCheck out;
  for (std::size_t i = 0; i < points; ++i) {
    const double lambda = 1.0 - static_cast<double>(i) / static_cast<double>(points - 1);
    const Vector theta = lambda * theta0 + (1.0 - lambda) * theta_target;
    const double n = base_gradient(theta).norm();
    if (n > out.max_gradient_norm) {
      out.max_gradient_norm = n;
      out.argmax_index = i;
    }
  }
  return out;
}

}  // namespace collact
