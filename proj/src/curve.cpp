#include "collact/curve.hpp"

#include <algorithm>
#include <cmath>

#include "collact/error.hpp"

namespace collact {

const char* to_string(EvalMode mode) { return mode == EvalMode::exact ? "exact" : "mc"; }

EvalMode eval_mode_from_string(const std::string& name) {
  if (name == "exact") {
    return EvalMode::exact;
  }
  if (name == "mc") {
    return EvalMode::mc;
  }
  throw ConfigError("unknown evaluation mode '" + name + "'");
}

void SuccessCurve::validate(bool unit_success) const {
  if (points.empty()) {
    throw StructuralError("success curve is empty");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    if (!(pt.alpha >= 0.0 && pt.alpha <= 1.0)) {
      throw StructuralError("curve alpha outside [0, 1]");
    }
    if (i > 0 && !(pt.alpha > points[i - 1].alpha)) {
      throw StructuralError("curve alphas must be strictly increasing");
    }
    if (!std::isfinite(pt.success) || (unit_success && (pt.success < 0.0 || pt.success > 1.0))) {
      throw StructuralError("curve success outside [0, 1]");
    }
  }
}

double SuccessCurve::interpolate(double alpha) const {
  if (points.empty()) {
    throw StructuralError("success curve is empty");
  }
  if (alpha <= points.front().alpha) {
    return points.front().success;
  }
  if (alpha >= points.back().alpha) {
    return points.back().success;
  }
  const auto it = std::upper_bound(points.begin(), points.end(), alpha,
                                   [](double a, const CurvePoint& pt) { return a < pt.alpha; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double t = (alpha - lo.alpha) / (hi.alpha - lo.alpha);
  return lo.success + t * (hi.success - lo.success);
}

double SuccessCurve::max_success() const {
  if (points.empty()) {
    throw StructuralError("success curve is empty");
  }
  double best = points.front().success;
  for (const auto& pt : points) {
    best = std::max(best, pt.success);
  }
  return best;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  if (count < 2 || !(lo > 0.0) || !(hi > lo)) {
    throw ConfigError("geometric grid needs 0 < lo < hi and at least two points");
  }
  std::vector<double> grid(count);
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) {
    throw ConfigError("linear grid needs lo < hi and at least two points");
  }
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  grid.back() = hi;
  return grid;
}

}  // namespace collact
