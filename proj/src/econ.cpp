#include "collact/econ.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "collact/error.hpp"

namespace collact {

double ParticipationModel::threshold() const {
  if (!(free_ride >= 0.0 && free_ride < 1.0)) {
    throw DegenerateModelError("free-ride share must lie in [0, 1)");
  }
  if (!(cost >= 0.0) || !std::isfinite(cost)) {
    throw DegenerateModelError("participation cost must be finite and non-negative");
  }
  return cost / (1.0 - free_ride);
}

std::optional<double> alpha_crit(const SuccessCurve& curve, const ParticipationModel& model) {
  const double t = model.threshold();
  curve.validate();
  const auto& pts = curve.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].success > t) {
      if (i == 0) {
        return pts[0].alpha;
      }
      const auto& lo = pts[i - 1];
      const auto& hi = pts[i];
      const double frac = (t - lo.success) / (hi.success - lo.success);
      return lo.alpha + std::clamp(frac, 0.0, 1.0) * (hi.alpha - lo.alpha);
    }
  }
  return std::nullopt;
}

double budget(const SuccessCurve& curve, const ParticipationModel& model, double alpha_crit) {
  const double c = model.cost;
  const double gamma = model.free_ride;
  model.threshold();
  curve.validate();
  if (!(alpha_crit > 0.0)) {
    return 0.0;
  }
  const auto deficit = [&](double s) { return std::max(0.0, c + gamma * s - s); };

  std::vector<std::pair<double, double>> nodes;
  nodes.emplace_back(0.0, curve.points.front().success);
  for (const auto& pt : curve.points) {
    if (pt.alpha >= alpha_crit) {
      break;
    }
    if (pt.alpha > 0.0) {
      nodes.emplace_back(pt.alpha, pt.success);
    }
  }
  nodes.emplace_back(alpha_crit, curve.interpolate(alpha_crit));

  double area = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double h = nodes[i].first - nodes[i - 1].first;
    area += 0.5 * h * (deficit(nodes[i - 1].second) + deficit(nodes[i].second));
  }
  return area;
}

bool self_sustain_check(const SuccessCurve& curve, const ParticipationModel& model, double alpha) {
  model.threshold();
  const double s = curve.interpolate(alpha);
  return (1.0 - model.free_ride) * s - model.cost > 0.0;
}

EconReport econ_report(const SuccessCurve& curve, const ParticipationModel& model) {
  EconReport report;
  report.threshold_success = model.threshold();
  report.alpha_crit = alpha_crit(curve, model);
  if (report.alpha_crit) {
    report.budget = budget(curve, model, *report.alpha_crit);
  }
  return report;
}

}  // namespace collact
