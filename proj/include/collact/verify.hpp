#pragma once

// Bound verification: measures exact success on random scenarios and checks
// it against the closed-form lower bounds, row by row.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "collact/classify.hpp"

namespace collact {

struct VerifyJob {
  std::size_t scenario_count = 100;  // random discrete scenarios
  std::size_t max_features = 50;
  std::size_t max_labels = 5;
  std::vector<double> alphas;
  std::vector<PlantMode> strategies{PlantMode::feature_label, PlantMode::feature_only,
                                    PlantMode::erasure};
  std::vector<double> eps_values{0.0};
  double tolerance = 1e-9;

  // Ridge scenarios checked against the strongly convex bound at the critical
  // mass, half of it, and every grid alpha.
  std::size_t ridge_count = 0;
  std::size_t ridge_max_dim = 8;
  double ridge_tolerance = 1e-6;

  // Negative control: every bound is reported with its sign flipped.
  bool corrupt_bound = false;

  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct VerifyRow {
  std::string scenario;
  std::string strategy;
  double eps = 0.0;
  double alpha = 0.0;
  double measured = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // measured - bound
  bool pass = true;
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
  std::size_t failures = 0;
  bool passed() const { return failures == 0; }
  // `scenario,strategy,eps,alpha,measured,bound,slack,pass`
  std::string csv() const;
};

VerifyReport verify_bounds(const VerifyJob& job);

}  // namespace collact
