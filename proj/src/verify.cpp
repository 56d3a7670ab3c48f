#include "collact/verify.hpp"

#include <cmath>
#include <exception>

#include "collact/error.hpp"
#include "collact/io.hpp"
#include "collact/parallel.hpp"
#include "collact/riskmin.hpp"
#include "collact/scenario.hpp"
#include "collact/sweep.hpp"

namespace collact {

namespace {

VerifyRow make_row(std::string scenario, std::string strategy, double eps, double alpha,
                   double measured, double bound, double tol, bool corrupt) {
  VerifyRow row;
  row.scenario = std::move(scenario);
  row.strategy = std::move(strategy);
  row.eps = eps;
  row.alpha = alpha;
  row.measured = measured;
  row.bound = corrupt ? -bound : bound;
  row.slack = row.measured - row.bound;
  row.pass = row.measured >= row.bound - tol;
  return row;
}

std::vector<VerifyRow> discrete_rows(const VerifyJob& job, std::size_t index) {
  Rng rng = Rng(job.seed).fork(index);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::random_discrete;
  spec.feature_count = 2 + rng.uniform_index(job.max_features - 1);
  spec.label_count = 2 + rng.uniform_index(job.max_labels - 1);
  spec.target_label = spec.label_count;  // random target
  spec.seed = rng.next_u64();
  const ScenarioBundle bundle = generate_scenario(spec);
  const DiscreteScenario& s = *bundle.discrete;

  const SignalStats stats = signal_stats(s.p0, s.signal);
  BoundInputs in;
  in.xi = stats.uniqueness;
  in.delta = stats.subopt_gap;
  in.positivity = stats.positivity;
  in.tau = erasure_stats(s.p0, s.summary).sensitivity;

  std::vector<VerifyRow> rows;
  for (PlantMode mode : job.strategies) {
    const SignalMap& g = strategy_map(s, mode);
    std::optional<Strategy> h;
    if (mode == PlantMode::feature_label) {
      h = feature_label_strategy(s.p0.universe_ptr(), g);
    } else if (mode == PlantMode::feature_only) {
      h = feature_only_strategy(s.p0.universe_ptr(), g);
    }
    for (double eps : job.eps_values) {
      const Firm firm{eps};
      for (double alpha : job.alphas) {
        const double measured = h ? success_plant_exact(s.p0, g, *h, alpha, firm)
                                  : success_erase_exact(s.p0, g, alpha, firm);
        rows.push_back(make_row(bundle.id, to_string(mode), eps, alpha, measured,
                                bound_for(mode, alpha, in, eps), job.tolerance, job.corrupt_bound));
      }
    }
  }
  return rows;
}

std::vector<VerifyRow> ridge_rows(const VerifyJob& job, std::size_t index) {
  Rng rng = Rng(job.seed ^ 0x5249444745ULL).fork(index);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::ridge_demo;
  spec.dim = 1 + rng.uniform_index(job.ridge_max_dim);
  spec.atom_count = spec.dim + 2 + rng.uniform_index(28);
  spec.ridge_lambda = 0.01 + 0.2 * rng.uniform();
  spec.seed = rng.next_u64();
  const ScenarioBundle bundle = generate_scenario(spec);
  const ContinuousScenario& s = *bundle.continuous;

  const Neutralizer neut =
      build_neutralizing_distribution(s.loss, s.p0, s.theta_star, NeutralizeMode::feature_label);
  const GradientReport gr = gradient_report(s.loss, s.p0, neut.p_prime, s.theta_star);
  const double n0 = gr.g_p0_at_target.norm();
  const double np = gr.g_pprime_at_target.norm();
  const double a_star = critical_mass_convex(n0, np);

  std::vector<double> alphas{0.5 * a_star, a_star};
  for (double a : job.alphas) {
    if (a > 0.0) {
      alphas.push_back(a);
    }
  }
  std::vector<VerifyRow> rows;
  for (double alpha : alphas) {
    const NeutralizedMixture mix = apply_neutralizing_strategy(s.loss, s.p0, neut.p_prime, s.theta_star, alpha);
    const LossSpec firm_loss = make_loss_spec(s.loss.family, s.loss.lambda, mix.firm_view);
    const Vector theta = risk_minimize(firm_loss, mix.firm_view, 1e-13).state.theta;
    const double dist = (theta - s.theta_star).norm();
    rows.push_back(make_row(bundle.id, "neutralizing", 0.0, alpha, -dist,
                            bound_strongly_convex(alpha, n0, np, firm_loss.mu), job.ridge_tolerance,
                            job.corrupt_bound));
  }
  return rows;
}

}  // namespace

std::string VerifyReport::csv() const {
  std::string out = "scenario,strategy,eps,alpha,measured,bound,slack,pass\n";
  for (const auto& r : rows) {
    out += r.scenario + "," + r.strategy + "," + format_double(r.eps) + "," + format_double(r.alpha) + "," +
           format_double(r.measured) + "," + format_double(r.bound) + "," + format_double(r.slack) + "," +
           (r.pass ? "1" : "0") + "\n";
  }
  return out;
}

VerifyReport verify_bounds(const VerifyJob& job) {
  if (job.max_features < 2 || job.max_labels < 2) {
    throw ConfigError("verification scenarios need at least two features and two labels");
  }
  if (job.alphas.empty()) {
    throw ConfigError("verification needs an alpha grid");
  }
  const std::size_t total = job.scenario_count + job.ridge_count;
  std::vector<std::vector<VerifyRow>> parts(total);
  std::vector<std::exception_ptr> errors(total);
  parallel_for(total, job.jobs, [&](std::size_t i) {
    try {
      parts[i] = i < job.scenario_count ? discrete_rows(job, i) : ridge_rows(job, i - job.scenario_count);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  VerifyReport report;
  for (auto& part : parts) {
    for (auto& row : part) {
      report.failures += row.pass ? 0 : 1;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace collact
