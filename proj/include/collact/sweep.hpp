#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "collact/classify.hpp"
#include "collact/curve.hpp"
#include "collact/scenario.hpp"

namespace collact {

struct SweepJob {
  ScenarioSpec scenario;
  PlantMode strategy = PlantMode::feature_label;
  std::vector<double> alphas;
  double eps = 0.0;
  EvalMode mode = EvalMode::exact;
  std::size_t replications = 1;
  std::size_t n_train = 2000;
  std::size_t n_test = 2000;
  std::uint64_t seed = 0;  // Monte Carlo streams; the scenario has its own seed
  std::size_t jobs = 1;
  // Curve CSV. If a cell fails, the completed prefix is written here and
  // `<path>.resume.json` records where to pick up.
  std::optional<std::filesystem::path> output;

  void validate() const;
};

// Signal map the strategy acts through: the planting map, or the summary for
// erasure.
const SignalMap& strategy_map(const DiscreteScenario& s, PlantMode mode);

SuccessCurve run_sweep(const SweepJob& job);
SuccessCurve run_sweep(const DiscreteScenario& scenario, const std::string& scenario_id,
                       const SweepJob& job);

std::filesystem::path resume_marker(const std::filesystem::path& output);

}  // namespace collact
