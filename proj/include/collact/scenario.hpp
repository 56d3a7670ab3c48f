#pragma once

// Scenario generation. Every generator is a pure function of its spec
// (including the seed).

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "collact/classify.hpp"
#include "collact/probkit.hpp"
#include "collact/riskmin.hpp"

namespace collact {

enum class ScenarioKind { random_discrete, synthetic_trigger, erasure_demo, ridge_demo, steering_demo };

const char* to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

inline constexpr std::size_t kMaxFeatures = 10000;
inline constexpr std::size_t kMaxDim = 32;

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::random_discrete;
  // random_discrete: |X|. synthetic_trigger: number of content values.
  // erasure_demo: number of kept-coordinate values.
  std::size_t feature_count = 20;
  std::size_t label_count = 3;
  std::size_t dim = 3;          // ridge_demo / steering_demo
  std::size_t atom_count = 20;  // ridge_demo / steering_demo
  // synthetic_trigger: base mass of each trigger value (so xi of the signal).
  // random_discrete: 0 requests an off-support signal set; otherwise unused.
  std::optional<double> uniqueness;
  std::size_t target_label = 0;
  double label_noise = 0.0;  // rho: fraction of label mass resampled uniformly
  // synthetic_trigger: which reserved trigger value the signal uses.
  std::size_t trigger_encoding = 0;
  // erasure_demo: weight of the label component that depends on the erased
  // coordinate (0 gives tau = 0).
  double sensitivity = 0.0;
  double ridge_lambda = 0.1;
  std::uint64_t seed = 0;

  // Throws ConfigError when a size cap or range is violated.
  void validate() const;
};

struct DiscreteScenario {
  FiniteJointDistribution p0;
  SignalMap signal;   // planting map g with target y*
  SignalMap summary;  // idempotent erasure summary, no target
};

struct ContinuousScenario {
  DataDistribution p0;
  LossSpec loss;
  Vector theta0;      // risk minimizer under p0
  Vector theta_star;  // collective's target
};

struct ScenarioBundle {
  ScenarioSpec spec;
  std::string id;
  std::optional<DiscreteScenario> discrete;
  std::optional<ContinuousScenario> continuous;
};

ScenarioBundle generate_scenario(const ScenarioSpec& spec);

// Three-feature, three-label scenario used across tests and docs:
// P0 rows x0 {.30,.10,.05}, x1 {.10,.25,.05}, x2 {.02,.03,.10}; y* = 0;
// g: x0 -> x1, x1 -> x2, x2 -> x2. The summary map is the identity.
DiscreteScenario fixture_scenario();

// Applies (1 - rho) P0(y|x) + rho / |Y| to every supported feature point.
FiniteJointDistribution randomize_labels(const FiniteJointDistribution& p0, double rho);

}  // namespace collact
