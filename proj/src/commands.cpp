#include "collact/commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "collact/econ.hpp"
#include "collact/error.hpp"
#include "collact/io.hpp"
#include "collact/riskmin.hpp"
#include "collact/scenario.hpp"
#include "collact/sigmoid_fit.hpp"
#include "collact/steer.hpp"
#include "collact/sweep.hpp"
#include "collact/verify.hpp"

namespace collact {

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::size_t jobs = 1;
};

struct Job {
  json doc;
  fs::path dir;  // relative paths in the config resolve against this
  std::uint64_t seed = 0;
  fs::path out;
  std::size_t jobs = 1;

  const json& section(const char* name) const {
    static const json empty = json::object();
    return doc.contains(name) ? doc.at(name) : empty;
  }
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : dir / path;
  }
};

Job load(const Common& c) {
  Job job;
  job.doc = load_job(c.config);
  job.dir = fs::path(c.config).parent_path();
  job.seed = c.seed ? *c.seed : job.doc.value("seed", std::uint64_t{0});
  job.out = c.out;
  job.jobs = std::max<std::size_t>(1, c.jobs);
  return job;
}

template <typename T>
T opt(const json& j, const char* key, T fallback) {
  try {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

// The scenario block's own seed wins; otherwise the job seed is used.
ScenarioSpec scenario_spec(const Job& job) {
  if (!job.doc.contains("scenario")) {
    throw ConfigError("config has no scenario block");
  }
  json block = job.doc.at("scenario");
  if (!block.contains("seed")) {
    block["seed"] = job.seed;
  }
  return scenario_from_json(block);
}

std::string num(double v) { return format_double(v); }

struct LoadedContinuous {
  std::string id;
  ContinuousScenario s;
};

// Either a generated ridge/steering scenario or a data file with explicit
// loss and target.
LoadedContinuous load_continuous(const Job& job, const json& section) {
  if (section.contains("data")) {
    DataDistribution p0 = read_data(job.resolve(section.at("data").get<std::string>()));
    const LossFamily family = loss_family_from_string(opt<std::string>(section, "loss", "squared"));
    const LossSpec loss = make_loss_spec(family, opt<double>(section, "lambda", 0.0), p0);
    const Vector theta0 = risk_minimize(loss, p0).state.theta;
    if (!section.contains("theta_star")) {
      throw ConfigError("a data-file job needs theta_star");
    }
    Vector target = vector_from_json(section.at("theta_star"));
    if (target.size() != theta0.size()) {
      throw ConfigError("theta_star has the wrong dimension");
    }
    return {section.at("data").get<std::string>(), ContinuousScenario{std::move(p0), loss, theta0, std::move(target)}};
  }
  const ScenarioSpec spec = scenario_spec(job);
  ScenarioBundle b = generate_scenario(spec);
  if (!b.continuous) {
    throw ConfigError("this command needs a ridge_demo or steering_demo scenario");
  }
  return {b.id, std::move(*b.continuous)};
}

int cmd_sweep(const Job& job, std::ostream& out) {
  const json& s = job.section("sweep");
  SweepJob sj;
  sj.scenario = scenario_spec(job);
  sj.strategy = plant_mode_from_string(opt<std::string>(s, "strategy", "feature_label"));
  sj.alphas = alpha_grid_from_json(s.contains("alphas") ? s.at("alphas") : json());
  sj.eps = opt<double>(s, "eps", 0.0);
  sj.mode = eval_mode_from_string(opt<std::string>(s, "mode", "exact"));
  sj.replications = opt<std::size_t>(s, "replications", 1);
  sj.n_train = opt<std::size_t>(s, "n_train", 2000);
  sj.n_test = opt<std::size_t>(s, "n_test", 2000);
  sj.seed = job.seed;
  sj.jobs = job.jobs;
  sj.output = job.out / "curve.csv";
  const SuccessCurve curve = run_sweep(sj);
  out << "sweep " << curve.scenario_id << " " << curve.strategy_id << ": " << curve.points.size()
      << " points, max success " << num(curve.max_success()) << " -> " << sj.output->string() << "\n";
  return kExitOk;
}

int cmd_bounds(const Job& job, std::ostream& out) {
  const json& b = job.section("bounds");
  VerifyJob vj;
  vj.scenario_count = opt<std::size_t>(b, "scenario_count", vj.scenario_count);
  vj.max_features = opt<std::size_t>(b, "max_features", vj.max_features);
  vj.max_labels = opt<std::size_t>(b, "max_labels", vj.max_labels);
  vj.alphas = alpha_grid_from_json(b.contains("alphas") ? b.at("alphas") : json());
  if (b.contains("strategies")) {
    vj.strategies.clear();
    for (const auto& name : b.at("strategies")) {
      vj.strategies.push_back(plant_mode_from_string(name.get<std::string>()));
    }
  }
  vj.eps_values = opt<std::vector<double>>(b, "eps", vj.eps_values);
  vj.tolerance = opt<double>(b, "tolerance", vj.tolerance);
  vj.ridge_count = opt<std::size_t>(b, "ridge_count", vj.ridge_count);
  vj.ridge_max_dim = opt<std::size_t>(b, "ridge_max_dim", vj.ridge_max_dim);
  vj.corrupt_bound = opt<bool>(b, "corrupt_bound", false);
  vj.seed = job.seed;
  vj.jobs = job.jobs;
  const VerifyReport report = verify_bounds(vj);
  const fs::path path = job.out / "bounds.csv";
  write_text(path, report.csv());
  out << "bounds: " << report.rows.size() << " rows, " << report.failures << " failures -> " << path.string()
      << "\n";
  return report.passed() ? kExitOk : kExitVerification;
}

int cmd_riskmin(const Job& job, std::ostream& out) {
  const json& r = job.section("riskmin");
  const LoadedContinuous lc = load_continuous(job, r);
  const ContinuousScenario& s = lc.s;
  const std::string mode_name = opt<std::string>(r, "mode", "feature_label");
  NeutralizeMode mode;
  if (mode_name == "feature_label") {
    mode = NeutralizeMode::feature_label;
  } else if (mode_name == "feature_only") {
    mode = NeutralizeMode::feature_only;
  } else {
    throw ConfigError("unknown neutralizing mode '" + mode_name + "'");
  }
  NeutralizerOptions nopt;
  nopt.magnitude_scale = opt<double>(r, "magnitude_scale", nopt.magnitude_scale);
  if (r.contains("magnitude")) {
    nopt.magnitude = r.at("magnitude").get<double>();
  }
  const Neutralizer neut = build_neutralizing_distribution(s.loss, s.p0, s.theta_star, mode, nopt);
  const GradientReport gr = gradient_report(s.loss, s.p0, neut.p_prime, s.theta_star);
  const double n0 = gr.g_p0_at_target.norm();
  const double np = gr.g_pprime_at_target.norm();
  const double a_star = critical_mass_convex(n0, np);

  std::vector<double> alphas = alpha_grid_from_json(r.contains("alphas") ? r.at("alphas") : json());
  std::string csv = "alpha,dist_to_target,bound\n";
  for (double alpha : alphas) {
    double dist = 0.0;
    double mu = s.loss.mu;
    if (alpha > 0.0) {
      const NeutralizedMixture mix = apply_neutralizing_strategy(s.loss, s.p0, neut.p_prime, s.theta_star, alpha);
      const LossSpec firm_loss = make_loss_spec(s.loss.family, s.loss.lambda, mix.firm_view);
      mu = firm_loss.mu;
      dist = (risk_minimize(firm_loss, mix.firm_view).state.theta - s.theta_star).norm();
    } else {
      dist = (s.theta0 - s.theta_star).norm();
    }
    // Upper bound on the distance implied by the strongly convex bound.
    const double bound = -bound_strongly_convex(alpha, n0, np, mu);
    csv += num(alpha) + "," + num(dist) + "," + num(bound) + "\n";
  }
  const fs::path path = job.out / "riskmin.csv";
  write_text(path, csv);
  out << "riskmin " << lc.id << ": critical mass " << num(a_star) << ", cos(g', -g0) " << num(gr.angle_check)
      << " -> " << path.string() << "\n";
  return kExitOk;
}

int cmd_steer(const Job& job, std::ostream& out) {
  const json& st = job.section("steer");
  const LoadedContinuous lc = load_continuous(job, st);
  const ContinuousScenario& s = lc.s;
  LearnerConfig learner;
  learner.step_size = opt<double>(st, "step_size", learner.step_size);
  learner.horizon = opt<std::size_t>(st, "horizon", learner.horizon);
  learner.theta_init = st.contains("theta_init") ? vector_from_json(st.at("theta_init")) : s.theta0;
  ControlPolicy policy;
  policy.alpha = opt<double>(st, "alpha", policy.alpha);
  policy.xi_gc = opt<double>(st, "xi_gc", 1.0 / (policy.alpha * learner.step_size) * 0.5);
  policy.mode = control_mode_from_string(opt<std::string>(st, "mode", "byzantine"));
  policy.theta_target = s.theta_star;
  if (learner.theta_init.size() != policy.theta_target.size()) {
    throw ConfigError("theta_init has the wrong dimension");
  }
  const Trajectory traj = run_steered_descent(s.loss, s.p0, learner, policy);
  std::string csv = "t,dist,ratio\n";
  for (std::size_t t = 0; t < traj.distances.size(); ++t) {
    csv += std::to_string(t) + "," + num(traj.distances[t]) + "," +
           (t == 0 ? std::string() : num(traj.contraction_factors[t - 1])) + "\n";
  }
  const fs::path path = job.out / "trajectory.csv";
  write_text(path, csv);
  const ContractionAudit audit = contraction_audit(traj, learner.step_size, policy.alpha, traj.applied_xi);
  out << "steer " << lc.id << " (" << to_string(policy.mode) << "): final distance "
      << num(traj.distances.back()) << ", " << audit.violations << " contraction violations -> "
      << path.string() << "\n";
  return audit.passed() ? kExitOk : kExitVerification;
}

SuccessCurve econ_curve(const Job& job, const json& e) {
  if (e.contains("curve")) {
    return read_curve(job.resolve(e.at("curve").get<std::string>()));
  }
  // Built-in linear S(alpha) = alpha, handy for checking the economics alone.
  const std::size_t n = opt<std::size_t>(e, "linear_points", 1001);
  if (n < 2) {
    throw ConfigError("linear_points must be at least 2");
  }
  SuccessCurve curve;
  for (double a : linear_grid(0.0, 1.0, n)) {
    curve.points.push_back(CurvePoint{a, a, 0.0, EvalMode::exact});
  }
  curve.strategy_id = "linear";
  return curve;
}

int cmd_econ(const Job& job, std::ostream& out) {
  const json& e = job.section("econ");
  const SuccessCurve curve = econ_curve(job, e);
  ParticipationModel model{opt<double>(e, "cost", 0.0), opt<double>(e, "free_ride", 0.0)};
  const EconReport rep = econ_report(curve, model);
  std::string csv = "threshold,alpha_crit,budget,feasible\n";
  csv += num(rep.threshold_success) + "," + (rep.feasible() ? num(*rep.alpha_crit) : std::string()) + "," +
         (rep.feasible() ? num(rep.budget) : std::string()) + "," + (rep.feasible() ? "1" : "0") + "\n";
  const fs::path path = job.out / "econ.csv";
  write_text(path, csv);
  if (!rep.feasible()) {
    out << "econ: success never exceeds the threshold " << num(rep.threshold_success) << " -> "
        << path.string() << "\n";
    return kExitInfeasible;
  }
  out << "econ: alpha_crit " << num(*rep.alpha_crit) << ", budget " << num(rep.budget) << " -> "
      << path.string() << "\n";
  return kExitOk;
}

int cmd_fit(const Job& job, std::ostream& out) {
  const json& f = job.section("fit");
  if (!f.contains("curve")) {
    throw ConfigError("fit needs a curve path");
  }
  const SuccessCurve curve = read_curve(job.resolve(f.at("curve").get<std::string>()));
  const SigmoidFit fit = fit_sigmoid(curve);
  std::string csv = "slope,midpoint,offset,rmse,degenerate\n";
  csv += num(fit.slope) + "," + num(fit.midpoint) + "," + num(fit.offset) + "," + num(fit.rmse) + "," +
         (fit.degenerate ? "1" : "0") + "\n";
  const fs::path path = job.out / "fit.csv";
  write_text(path, csv);
  out << "fit: k " << num(fit.slope) << ", m " << num(fit.midpoint) << ", o " << num(fit.offset) << ", rmse "
      << num(fit.rmse) << (fit.degenerate ? " (degenerate)" : "") << " -> " << path.string() << "\n";
  return kExitOk;
}

int cmd_scenario_dump(const Job& job, std::ostream& out) {
  const ScenarioSpec spec = scenario_spec(job);
  const ScenarioBundle b = generate_scenario(spec);
  json meta;
  meta["schema"] = "collact.scenario/1";
  meta["id"] = b.id;
  meta["spec"] = scenario_to_json(spec);
  if (b.discrete) {
    const auto& d = *b.discrete;
    write_distribution(job.out / "p0.csv", d.p0);
    write_signal_map(job.out / "signal.csv", d.p0.universe(), d.signal);
    write_signal_map(job.out / "summary.csv", d.p0.universe(), d.summary);
    const SignalStats st = signal_stats(d.p0, d.signal);
    meta["target_label"] = *d.signal.target_label;
    meta["uniqueness"] = st.uniqueness;
    meta["subopt_gap"] = st.subopt_gap;
    meta["positivity"] = st.positivity;
    meta["sensitivity"] = erasure_stats(d.p0, d.summary).sensitivity;
  } else {
    const auto& c = *b.continuous;
    write_data(job.out / "p0.csv", c.p0);
    meta["loss"] = to_string(c.loss.family);
    meta["lambda"] = c.loss.lambda;
    meta["mu"] = c.loss.mu;
    meta["beta"] = c.loss.beta;
    meta["theta0"] = vector_to_json(c.theta0);
    meta["theta_star"] = vector_to_json(c.theta_star);
  }
  write_text(job.out / "scenario.json", meta.dump(2) + "\n");
  out << "scenario " << b.id << " -> " << job.out.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collective action simulation toolkit", "collact"};
  app.require_subcommand(1);
  Common common;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "job config (JSON)")->required();
    sub->add_option("--seed", common.seed, "override the job seed");
    sub->add_option("--out", common.out, "output directory")->capture_default_str();
    sub->add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);
  };
  std::function<int(const Job&, std::ostream&)> action;
  const auto command = [&](const char* name, const char* help, int (*fn)(const Job&, std::ostream&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    sub->callback([&action, fn] { action = fn; });
  };
  command("sweep", "success curve over an alpha grid", cmd_sweep);
  command("bounds", "check measured success against the closed-form bounds", cmd_bounds);
  command("riskmin", "gradient-neutralizing collective against a convex learner", cmd_riskmin);
  command("steer", "steer a gradient-descent learner towards a target", cmd_steer);
  command("econ", "critical participation and subsidy budget", cmd_econ);
  command("fit", "fit a sigmoid to a success curve", cmd_fit);
  CLI::App* scenario = app.add_subcommand("scenario", "scenario utilities");
  scenario->require_subcommand(1);
  CLI::App* dump = scenario->add_subcommand("dump", "write a generated scenario to disk");
  add_common(dump);
  dump->callback([&action] { action = cmd_scenario_dump; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    const Job job = load(common);
    fs::create_directories(job.out);
    return action(job, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InfeasiblePolicyError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const NoNeutralizerError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const UnsupportedModeError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const DegenerateModelError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const NonUniqueMinimizerError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace collact
