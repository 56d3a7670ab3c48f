#include "collact/sweep.hpp"

#include <cmath>
#include <exception>
#include <string>

#include "collact/error.hpp"
#include "collact/io.hpp"
#include "collact/parallel.hpp"

namespace collact {

namespace {

struct Cell {
  double success = 0.0;
  double std_error = 0.0;
  std::exception_ptr error;
};

Strategy plant_strategy(const DiscreteScenario& s, PlantMode mode) {
  if (mode == PlantMode::feature_only) {
    return feature_only_strategy(s.p0.universe_ptr(), s.signal);
  }
  return feature_label_strategy(s.p0.universe_ptr(), s.signal);
}

}  // namespace

void SweepJob::validate() const {
  if (alphas.empty()) {
    throw ConfigError("sweep needs at least one alpha");
  }
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0 && alphas[i] <= 1.0) || (i > 0 && !(alphas[i] > alphas[i - 1]))) {
      throw ConfigError("alpha grid must be strictly increasing inside [0, 1]");
    }
  }
  if (replications < 1) {
    throw ConfigError("replications must be at least 1");
  }
  if (!(eps >= 0.0 && eps < 1.0)) {
    throw ConfigError("eps must lie in [0, 1)");
  }
  if (mode == EvalMode::mc && (n_train < 1 || n_test < 1)) {
    throw ConfigError("Monte Carlo sweeps need positive n_train and n_test");
  }
}

const SignalMap& strategy_map(const DiscreteScenario& s, PlantMode mode) {
  return mode == PlantMode::erasure ? s.summary : s.signal;
}

std::filesystem::path resume_marker(const std::filesystem::path& output) {
  auto p = output;
  p += ".resume.json";
  return p;
}

SuccessCurve run_sweep(const SweepJob& job) {
  const ScenarioBundle bundle = generate_scenario(job.scenario);
  if (!bundle.discrete) {
    throw UnsupportedModeError("success sweeps need a discrete scenario; use riskmin or steer");
  }
  return run_sweep(*bundle.discrete, bundle.id, job);
}

SuccessCurve run_sweep(const DiscreteScenario& scenario, const std::string& scenario_id,
                       const SweepJob& job) {
  job.validate();
  const Firm firm{job.eps};
  const SignalMap& g = strategy_map(scenario, job.strategy);
  const bool erase = job.strategy == PlantMode::erasure;
  std::optional<Strategy> strategy;
  if (!erase) {
    strategy = plant_strategy(scenario, job.strategy);
  }

  const std::size_t reps = job.mode == EvalMode::exact ? 1 : job.replications;
  const std::size_t n_cells = job.alphas.size() * reps;
  std::vector<Cell> cells(n_cells);
  const Rng root(job.seed);
  parallel_for(n_cells, job.jobs, [&](std::size_t c) {
    const std::size_t i = c / reps;
    const std::size_t r = c % reps;
    const double alpha = job.alphas[i];
    try {
      if (job.mode == EvalMode::exact) {
        cells[c].success = erase ? success_erase_exact(scenario.p0, g, alpha, firm)
                                 : success_plant_exact(scenario.p0, g, *strategy, alpha, firm);
      } else {
        Rng rng = root.fork(i).fork(r);
        const McEstimate est =
            erase ? success_erase_mc(scenario.p0, g, alpha, firm, job.n_train, job.n_test, rng)
                  : success_plant_mc(scenario.p0, g, *strategy, alpha, firm, job.n_train, job.n_test, rng);
        cells[c].success = est.success;
        cells[c].std_error = est.std_error;
      }
    } catch (...) {
      cells[c].error = std::current_exception();
    }
  });

  SuccessCurve curve;
  curve.strategy_id = to_string(job.strategy);
  curve.scenario_id = scenario_id;
  std::optional<std::size_t> failed;
  for (std::size_t i = 0; i < job.alphas.size() && !failed; ++i) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const Cell& cell = cells[i * reps + r];
      if (cell.error) {
        failed = i;
        break;
      }
      sum += cell.success;
      sum_sq += cell.success * cell.success;
    }
    if (failed) {
      break;
    }
    CurvePoint pt;
    pt.alpha = job.alphas[i];
    pt.mode = job.mode;
    pt.success = sum / static_cast<double>(reps);
    if (reps == 1) {
      pt.std_error = cells[i].std_error;
    } else {
      // Spread of replicate means covers both training and test noise.
      const double n = static_cast<double>(reps);
      const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
      pt.std_error = std::sqrt(var / n);
    }
    curve.points.push_back(pt);
  }

  if (failed) {
    const std::size_t i = *failed;
    std::exception_ptr err;
    for (std::size_t r = 0; r < reps && !err; ++r) {
      err = cells[i * reps + r].error;
    }
    if (job.output) {
      write_curve(*job.output, curve);
      std::string what = "unknown error";
      try {
        std::rethrow_exception(err);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      json marker;
      marker["next_alpha_index"] = i;
      marker["alpha"] = job.alphas[i];
      marker["error"] = what;
      write_text(resume_marker(*job.output), marker.dump(2) + "\n");
    }
    std::rethrow_exception(err);
  }

  if (job.output) {
    write_curve(*job.output, curve);
    std::error_code ec;
    std::filesystem::remove(resume_marker(*job.output), ec);
  }
  return curve;
}

}  // namespace collact
