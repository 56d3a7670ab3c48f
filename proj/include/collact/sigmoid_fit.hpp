#pragma once

// Least-squares fit of f(alpha) = o + (1 - o) / (1 + exp(-k (alpha - m))).
// The upper asymptote is fixed at 1.

#include <span>

#include "collact/curve.hpp"

namespace collact {

struct SigmoidFit {
  double slope = 0.0;     // k
  double midpoint = 0.0;  // m
  double offset = 0.0;    // o
  double rmse = 0.0;
  bool degenerate = false;  // constant input; only the offset is meaningful
};

double sigmoid_value(const SigmoidFit& fit, double alpha);

// Coarse grid over (k, m, o), then damped Gauss-Newton. Needs >= 4 points.
SigmoidFit fit_sigmoid(std::span<const double> alphas, std::span<const double> success);
SigmoidFit fit_sigmoid(const SuccessCurve& curve);

}  // namespace collact
