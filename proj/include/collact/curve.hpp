#pragma once

#include <string>
#include <vector>

namespace collact {

enum class EvalMode { exact, mc };

const char* to_string(EvalMode mode);
EvalMode eval_mode_from_string(const std::string& name);

struct CurvePoint {
  double alpha = 0.0;
  double success = 0.0;
  double std_error = 0.0;  // 0 for exact evaluations
  EvalMode mode = EvalMode::exact;
};

// Tabulated S(alpha). Alphas strictly increasing in [0, 1].
struct SuccessCurve {
  std::vector<CurvePoint> points;
  std::string strategy_id;
  std::string scenario_id;

  // Throws StructuralError when the invariants do not hold. Success values are
  // only range-checked when `unit_success` is set (riskmin curves are <= 0).
  void validate(bool unit_success = true) const;

  // Piecewise-linear S(alpha); constant extension outside the grid.
  double interpolate(double alpha) const;

  double max_success() const;
};

// Geometric grid from lo to hi (inclusive), count >= 2.
std::vector<double> geometric_grid(double lo, double hi, std::size_t count);
std::vector<double> linear_grid(double lo, double hi, std::size_t count);

}  // namespace collact
