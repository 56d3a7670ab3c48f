#include "collact/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "collact/error.hpp"

namespace collact {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t require_target(const SignalMap& g) {
  if (!g.target_label) {
    throw MissingTargetError("signal map has no target label");
  }
  return *g.target_label;
}

// Marginals sum to 1 only up to rounding, so take whichever side is smaller:
// an event that covers everything (or nothing) then comes out exactly 1 (or 0).
double event_probability(double hit, double miss) {
  return std::clamp(miss <= hit ? 1.0 - miss : hit, 0.0, 1.0);
}

}  // namespace

std::size_t global_modal_label(const FiniteJointDistribution& p) {
  const auto marg = p.label_marginals();
  return argmax_first(marg);
}

ClassifierModel bayes_classifier(const FiniteJointDistribution& p, const FallbackRule& fallback) {
  const Universe& u = p.universe();
  ClassifierModel model;
  model.decision.resize(u.feature_count());
  std::optional<std::size_t> fallback_label;
  const auto mass = p.masses();
  for (std::size_t x = 0; x < u.feature_count(); ++x) {
    const auto row = mass.subspan(u.point(x, 0), u.label_count());
    const double px = std::accumulate(row.begin(), row.end(), 0.0);
    if (px > 0.0) {
      // argmax of the joint row equals argmax of the conditional.
      model.decision[x] = argmax_first(row);
    } else {
      if (!fallback_label) {
        fallback_label = fallback(p);
      }
      model.decision[x] = *fallback_label;
    }
  }
  return model;
}

AdversarialFit eps_adversarial_fit(const FiniteJointDistribution& p, double eps,
                                   const SuccessEvent& success, const FallbackRule& fallback) {
  if (!(eps >= 0.0 && eps < 1.0)) {
    throw StructuralError("eps must lie in [0, 1)");
  }
  ClassifierModel current = bayes_classifier(p, fallback);
  if (eps == 0.0) {
    return AdversarialFit{current, p, 0.0, 0};
  }
  current.provenance = ClassifierProvenance::eps_adversarial;
  current.eps = eps;

  const Universe& u = p.universe();
  const std::size_t k = u.label_count();
  struct Candidate {
    double cost;
    std::size_t x;
    std::size_t competitor;
  };
  std::vector<Candidate> candidates;
  for (std::size_t x = 0; x < u.feature_count(); ++x) {
    if (!(p.marginal(x) > 0.0)) {
      continue;
    }
    const std::size_t winner = current.decision[x];
    std::size_t competitor = winner == 0 ? 1 : 0;
    for (std::size_t y = 0; y < k; ++y) {
      if (y != winner && p.mass(x, y) > p.mass(x, competitor)) {
        competitor = y;
      }
    }
    const double margin = p.mass(x, winner) - p.mass(x, competitor);
    candidates.push_back({0.5 * margin, x, competitor});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.cost, a.x) < std::tie(b.cost, b.x);
  });

  std::vector<double> mass(p.masses().begin(), p.masses().end());
  double used = 0.0;
  std::size_t flips = 0;
  double current_success = success(current);
  for (const auto& c : candidates) {
    if (used + c.cost > eps) {
      break;
    }
    const std::size_t winner = current.decision[c.x];
    current.decision[c.x] = c.competitor;
    const double trial = success(current);
    if (trial < current_success) {
      current_success = trial;
      used += c.cost;
      ++flips;
      mass[u.point(c.x, winner)] -= c.cost;
      mass[u.point(c.x, c.competitor)] += c.cost;
    } else {
      current.decision[c.x] = winner;
    }
  }
  for (double& m : mass) {
    m = std::max(m, 0.0);
  }
  return AdversarialFit{current, FiniteJointDistribution::from_weights(p.universe_ptr(), mass),
                        used, flips};
}

ClassifierModel eps_adversarial_classifier(const FiniteJointDistribution& p, double eps,
                                           const SuccessEvent& success) {
  return eps_adversarial_fit(p, eps, success).model;
}

ClassifierModel Firm::fit(const FiniteJointDistribution& p, const SuccessEvent& success) const {
  if (eps == 0.0) {
    return bayes_classifier(p, fallback);
  }
  return eps_adversarial_fit(p, eps, success, fallback).model;
}

std::vector<std::size_t> SignalMap::signal_set() const {
  std::vector<std::size_t> out = image;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void SignalMap::validate(const Universe& universe) const {
  if (image.size() != universe.feature_count()) {
    throw StructuralError("signal map must be defined on every feature point");
  }
  for (std::size_t gx : image) {
    if (gx >= universe.feature_count()) {
      throw StructuralError("signal map image outside the universe");
    }
  }
  if (target_label && *target_label >= universe.label_count()) {
    throw StructuralError("target label outside the universe");
  }
}

Strategy feature_label_strategy(UniversePtr universe, const SignalMap& g) {
  const std::size_t target = require_target(g);
  g.validate(*universe);
  std::vector<Strategy::Row> rows(universe->size());
  for (std::size_t z = 0; z < rows.size(); ++z) {
    rows[z] = {{universe->point(g(universe->feature_of(z)), target), 1.0}};
  }
  return Strategy(std::move(universe), std::move(rows));
}

Strategy feature_only_strategy(UniversePtr universe, const SignalMap& g) {
  const std::size_t target = require_target(g);
  g.validate(*universe);
  std::vector<Strategy::Row> rows(universe->size());
  for (std::size_t z = 0; z < rows.size(); ++z) {
    const std::size_t x = universe->feature_of(z);
    const std::size_t y = universe->label_of(z);
    rows[z] = {{y == target ? universe->point(g(x), target) : z, 1.0}};
  }
  return Strategy(std::move(universe), std::move(rows));
}

ErasureStrategy erasure_strategy(const FiniteJointDistribution& p0, const SignalMap& g) {
  const Universe& u = p0.universe();
  g.validate(u);
  std::vector<Strategy::Row> rows(u.size());
  std::vector<std::size_t> fallback_points;
  for (std::size_t x = 0; x < u.feature_count(); ++x) {
    std::size_t label = 0;
    if (p0.marginal(g(x)) > 0.0) {
      label = argmax_first(conditional(p0, g(x)));
    } else {
      if (p0.marginal(x) > 0.0) {
        label = argmax_first(conditional(p0, x));
        fallback_points.push_back(x);
      } else {
        label = global_modal_label(p0);
      }
    }
    for (std::size_t y = 0; y < u.label_count(); ++y) {
      rows[u.point(x, y)] = {{u.point(x, label), 1.0}};
    }
  }
  return ErasureStrategy{Strategy(p0.universe_ptr(), std::move(rows)), std::move(fallback_points)};
}

double plant_success(const FiniteJointDistribution& p0, const SignalMap& g,
                     const ClassifierModel& f) {
  const std::size_t target = require_target(g);
  double hit = 0.0;
  double miss = 0.0;
  for (std::size_t x = 0; x < p0.universe().feature_count(); ++x) {
    (f(g(x)) == target ? hit : miss) += p0.marginal(x);
  }
  return event_probability(hit, miss);
}

double erase_success(const FiniteJointDistribution& p0, const SignalMap& g,
                     const ClassifierModel& f) {
  double hit = 0.0;
  double miss = 0.0;
  for (std::size_t x = 0; x < p0.universe().feature_count(); ++x) {
    (f(x) == f(g(x)) ? hit : miss) += p0.marginal(x);
  }
  return event_probability(hit, miss);
}

double success_plant_exact(const FiniteJointDistribution& p0, const SignalMap& g,
                           const Strategy& strategy, double alpha, const Firm& firm) {
  const auto pstar = pushforward(p0, strategy);
  const auto p = mixture(p0, pstar, alpha);
  const SuccessEvent event = [&](const ClassifierModel& f) { return plant_success(p0, g, f); };
  return event(firm.fit(p, event));
}

double success_erase_exact(const FiniteJointDistribution& p0, const SignalMap& g, double alpha,
                           const Firm& firm) {
  const auto h = erasure_strategy(p0, g);
  const auto pstar = pushforward(p0, h.strategy);
  const auto p = mixture(p0, pstar, alpha);
  const SuccessEvent event = [&](const ClassifierModel& f) { return erase_success(p0, g, f); };
  return event(firm.fit(p, event));
}

SignalStats signal_stats(const FiniteJointDistribution& p0, const SignalMap& g) {
  const std::size_t target = require_target(g);
  const Universe& u = p0.universe();
  g.validate(u);
  SignalStats stats;
  stats.per_point_gaps.assign(u.feature_count(), 0.0);
  double positivity = 1.0;
  for (std::size_t x = 0; x < u.feature_count(); ++x) {
    if (!(p0.marginal(x) > 0.0)) {
      continue;
    }
    const auto cond = conditional(p0, x);
    const double best = *std::max_element(cond.begin(), cond.end());
    stats.per_point_gaps[x] = best - cond[target];
    positivity = std::min(positivity, cond[target]);
  }
  stats.positivity = positivity;
  for (std::size_t xs : g.signal_set()) {
    stats.uniqueness += p0.marginal(xs);
    stats.subopt_gap = std::max(stats.subopt_gap, stats.per_point_gaps[xs]);
  }
  stats.uniqueness = std::min(stats.uniqueness, 1.0);
  return stats;
}

ErasureStats erasure_stats(const FiniteJointDistribution& p0, const SignalMap& g) {
  const Universe& u = p0.universe();
  g.validate(u);
  ErasureStats stats;
  stats.per_point.assign(u.feature_count(), 0.0);
  for (std::size_t x = 0; x < u.feature_count(); ++x) {
    const double px = p0.marginal(x);
    if (!(px > 0.0)) {
      continue;
    }
    const auto cx = conditional(p0, x);
    const auto cg = conditional(p0, g(x));
    double worst = 0.0;
    for (std::size_t y = 0; y < cx.size(); ++y) {
      worst = std::max(worst, std::abs(cx[y] - cg[y]));
    }
    stats.per_point[x] = worst;
    stats.sensitivity += px * worst;
  }
  stats.sensitivity = std::clamp(stats.sensitivity, 0.0, 1.0);
  return stats;
}

namespace {

double eps_penalty(double eps) { return eps / (1.0 - eps); }

double cap(double v) { return std::min(v, 1.0); }

}  // namespace

double bound_feature_label(double alpha, double xi, double delta, double eps) {
  if (!(alpha > 0.0) || !(eps < 1.0)) {
    return kNegInf;
  }
  return cap(1.0 - (1.0 - alpha) / alpha * delta * xi - eps_penalty(eps));
}

double bound_feature_only(double alpha, double xi, double p, double eps) {
  if (!(alpha > 0.0) || !(p > 0.0) || !(eps < 1.0)) {
    return kNegInf;
  }
  return cap(1.0 - (1.0 - p) / (p * alpha) * xi - eps_penalty(eps));
}

double bound_erasure(double alpha, double tau, double eps) {
  if (!(alpha > 0.0) || !(eps < 1.0)) {
    return kNegInf;
  }
  return cap(1.0 - 2.0 * (1.0 - alpha) / alpha * tau - eps_penalty(eps));
}

const char* to_string(PlantMode mode) {
  switch (mode) {
    case PlantMode::feature_label:
      return "feature_label";
    case PlantMode::feature_only:
      return "feature_only";
    case PlantMode::erasure:
      return "erasure";
  }
  return "?";
}

PlantMode plant_mode_from_string(const std::string& name) {
  if (name == "feature_label") {
    return PlantMode::feature_label;
  }
  if (name == "feature_only") {
    return PlantMode::feature_only;
  }
  if (name == "erasure") {
    return PlantMode::erasure;
  }
  throw ConfigError("unknown strategy '" + name + "'");
}

double bound_for(PlantMode mode, double alpha, const BoundInputs& in, double eps) {
  switch (mode) {
    case PlantMode::feature_label:
      return bound_feature_label(alpha, in.xi, in.delta, eps);
    case PlantMode::feature_only:
      return bound_feature_only(alpha, in.xi, in.positivity, eps);
    case PlantMode::erasure:
      return bound_erasure(alpha, in.tau, eps);
  }
  return kNegInf;
}

std::optional<double> critical_mass_formula(PlantMode mode, double s_star, const BoundInputs& in,
                                            double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) {
    return std::nullopt;
  }
  // Room left for the alpha-dependent term once the eps penalty is paid.
  const double room = 1.0 - s_star - eps_penalty(eps);
  double value = 0.0;
  switch (mode) {
    case PlantMode::feature_label: {
      const double load = in.delta * in.xi;
      if (room < 0.0 || (room == 0.0 && load == 0.0)) {
        return room == 0.0 ? std::optional<double>(0.0) : std::nullopt;
      }
      value = load == 0.0 ? 0.0 : load / (room + load);
      break;
    }
    case PlantMode::feature_only: {
      if (!(in.positivity > 0.0)) {
        return std::nullopt;
      }
      const double load = (1.0 - in.positivity) / in.positivity * in.xi;
      if (load == 0.0) {
        if (room < 0.0) {
          return std::nullopt;
        }
        value = 0.0;
        break;
      }
      if (!(room > 0.0)) {
        return std::nullopt;
      }
      value = load / room;
      break;
    }
    case PlantMode::erasure: {
      const double half_room = 0.5 * (1.0 - s_star) - 0.5 * eps_penalty(eps);
      if (half_room < 0.0 || (half_room == 0.0 && in.tau == 0.0)) {
        return half_room == 0.0 ? std::optional<double>(0.0) : std::nullopt;
      }
      value = in.tau == 0.0 ? 0.0 : in.tau / (half_room + in.tau);
      break;
    }
  }
  if (!(value <= 1.0)) {
    return std::nullopt;
  }
  return value;
}

TruncatedPositivity truncated_positivity(const FiniteJointDistribution& p0,
                                         const std::vector<std::size_t>& region,
                                         std::size_t target_label) {
  const Universe& u = p0.universe();
  if (target_label >= u.label_count()) {
    throw StructuralError("target label outside the universe");
  }
  TruncatedPositivity out;
  out.positivity = 1.0;
  bool any = false;
  for (std::size_t x : region) {
    if (x >= u.feature_count()) {
      throw StructuralError("region point outside the universe");
    }
  }
  std::vector<std::size_t> unique_region = region;
  std::sort(unique_region.begin(), unique_region.end());
  unique_region.erase(std::unique(unique_region.begin(), unique_region.end()), unique_region.end());
  for (std::size_t x : unique_region) {
    const double px = p0.marginal(x);
    if (!(px > 0.0)) {
      continue;
    }
    any = true;
    out.retained_mass += px;
    out.positivity = std::min(out.positivity, p0.mass(x, target_label) / px);
  }
  if (!any) {
    throw EmptyRegionError("region carries no base mass");
  }
  out.retained_mass = std::min(out.retained_mass, 1.0);
  return out;
}

std::optional<double> empirical_critical_mass(const SuccessCurve& curve, double s_star) {
  curve.validate(false);
  const auto& pts = curve.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].success >= s_star) {
      if (i == 0) {
        return pts[0].alpha;
      }
      const auto& lo = pts[i - 1];
      const auto& hi = pts[i];
      const double t = (s_star - lo.success) / (hi.success - lo.success);
      return lo.alpha + t * (hi.alpha - lo.alpha);
    }
  }
  return std::nullopt;
}

namespace {

// Shared body of the Monte Carlo protocols. `test_event` scores one fresh base
// feature draw against the fitted classifier.
template <typename TestEvent>
McEstimate run_mc(const FiniteJointDistribution& p0, const Strategy& strategy, double alpha,
                  const Firm& firm, const SuccessEvent& adversary_event, std::size_t n_train,
                  std::size_t n_test, Rng& rng, TestEvent test_event) {
  if (n_train == 0 || n_test == 0) {
    throw StructuralError("Monte Carlo needs positive train and test sizes");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw StructuralError("alpha outside [0, 1]");
  }
  const Universe& u = p0.universe();
  auto train = sample(p0, rng, n_train);
  const auto k = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n_train)));
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n_train - i));
    std::swap(order[i], order[j]);
    auto& pt = train[order[i]];
    const std::size_t dest = strategy.apply(u.point(pt.x, pt.y), rng);
    pt = {u.feature_of(dest), u.label_of(dest)};
  }
  const auto emp = empirical(p0.universe_ptr(), train);
  const ClassifierModel f = firm.fit(emp, adversary_event);
  const auto test = sample(p0, rng, n_test);
  std::size_t hits = 0;
  for (const auto& pt : test) {
    if (test_event(f, pt.x)) {
      ++hits;
    }
  }
  const double s = static_cast<double>(hits) / static_cast<double>(n_test);
  return McEstimate{s, std::sqrt(s * (1.0 - s) / static_cast<double>(n_test))};
}

}  // namespace

McEstimate success_plant_mc(const FiniteJointDistribution& p0, const SignalMap& g,
                            const Strategy& strategy, double alpha, const Firm& firm,
                            std::size_t n_train, std::size_t n_test, Rng& rng) {
  const std::size_t target = require_target(g);
  const SuccessEvent event = [&](const ClassifierModel& f) { return plant_success(p0, g, f); };
  return run_mc(p0, strategy, alpha, firm, event, n_train, n_test, rng,
                [&](const ClassifierModel& f, std::size_t x) { return f(g(x)) == target; });
}

McEstimate success_erase_mc(const FiniteJointDistribution& p0, const SignalMap& g, double alpha,
                            const Firm& firm, std::size_t n_train, std::size_t n_test, Rng& rng) {
  const auto h = erasure_strategy(p0, g);
  const SuccessEvent event = [&](const ClassifierModel& f) { return erase_success(p0, g, f); };
  return run_mc(p0, h.strategy, alpha, firm, event, n_train, n_test, rng,
                [&](const ClassifierModel& f, std::size_t x) { return f(x) == f(g(x)); });
}

}  // namespace collact
