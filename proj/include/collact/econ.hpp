#pragma once

// Participation economics: an individual pays cost c to join and receives
// S(alpha); staying out yields the free-ride share gamma S(alpha). Joining is
// rational iff S(alpha) - c > gamma S(alpha), i.e. S(alpha) > c / (1 - gamma).

#include <optional>

#include "collact/curve.hpp"

namespace collact {

struct ParticipationModel {
  double cost = 0.0;       // c
  double free_ride = 0.0;  // gamma in [0, 1)

  // c / (1 - gamma). Throws DegenerateModelError for gamma >= 1.
  double threshold() const;
};

struct EconReport {
  double threshold_success = 0.0;
  std::optional<double> alpha_crit;  // empty when infeasible
  double budget = 0.0;
  bool feasible() const { return alpha_crit.has_value(); }
};

// First crossing of S(alpha) above the threshold, linearly interpolated
// between the last grid point at or below it and the first point strictly
// above it. Empty when no grid point strictly exceeds the threshold.
std::optional<double> alpha_crit(const SuccessCurve& curve, const ParticipationModel& model);

// Area of the deficit max(0, c + gamma S - S) over [0, alpha_crit] by the
// trapezoid rule on the curve grid. The curve is extended to alpha = 0 with
// its first value, and the last panel ends at alpha_crit.
double budget(const SuccessCurve& curve, const ParticipationModel& model, double alpha_crit);

// (1 - gamma) S(alpha) - c > 0 at the interpolated S.
bool self_sustain_check(const SuccessCurve& curve, const ParticipationModel& model, double alpha);

EconReport econ_report(const SuccessCurve& curve, const ParticipationModel& model);

}  // namespace collact
