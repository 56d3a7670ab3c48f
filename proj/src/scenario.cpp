#include "collact/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "collact/error.hpp"
#include "collact/rng.hpp"

namespace collact {

namespace {

constexpr const char* kKindNames[] = {"random_discrete", "synthetic_trigger", "erasure_demo",
                                      "ridge_demo", "steering_demo"};

// Trigger slot values: 0 is "no symbol", 1..kTriggerValues are reserved symbols.
constexpr std::size_t kTriggerValues = 3;
constexpr std::size_t kTriggerSlots = kTriggerValues + 1;

// Labels resampled uniformly for a rho-fraction of each feature's mass.
std::vector<double> noised_masses(const FiniteJointDistribution& p0, double rho) {
  const auto& u = p0.universe();
  const std::size_t ny = u.label_count();
  std::vector<double> out(p0.masses().begin(), p0.masses().end());
  if (rho == 0.0) {
    return out;
  }
  for (std::size_t x = 0; x < u.feature_count(); ++x) {
    const double px = p0.marginal(x);
    for (std::size_t y = 0; y < ny; ++y) {
      out[u.point(x, y)] = (1.0 - rho) * p0.mass(x, y) + rho * px / static_cast<double>(ny);
    }
  }
  return out;
}

SignalMap identity_map(std::size_t n) {
  SignalMap g;
  g.image.resize(n);
  std::iota(g.image.begin(), g.image.end(), std::size_t{0});
  return g;
}

DiscreteScenario random_discrete(const ScenarioSpec& spec, Rng& rng) {
  const std::size_t nx = spec.feature_count;
  const std::size_t ny = spec.label_count;
  auto u = std::make_shared<const Universe>(Universe::dense(nx, ny));
  const bool off_support_signal = spec.uniqueness && *spec.uniqueness == 0.0;

  std::vector<bool> supported(nx);
  std::size_t n_supported = 0;
  for (std::size_t x = 0; x < nx; ++x) {
    supported[x] = rng.uniform() >= 0.2;
    n_supported += supported[x] ? 1 : 0;
  }
  if (n_supported == 0) {
    supported[rng.uniform_index(nx)] = true;
  }
  if (off_support_signal && std::all_of(supported.begin(), supported.end(), [](bool b) { return b; })) {
    if (nx < 2) {
      throw ConfigError("an off-support signal needs at least two features");
    }
    supported[nx - 1] = false;
  }

  const bool sparse = rng.uniform() < 0.5;
  std::vector<double> w(u->size(), 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    if (!supported[x]) {
      continue;
    }
    const double scale = rng.exponential();
    bool any = false;
    for (std::size_t y = 0; y < ny; ++y) {
      const bool zeroed = sparse && rng.uniform() < 0.3;
      const double e = rng.exponential();
      if (!zeroed) {
        w[u->point(x, y)] = scale * e;
        any = any || e > 0.0;
      }
    }
    if (!any) {
      w[u->point(x, rng.uniform_index(ny))] = scale + 1e-3;
    }
  }
  FiniteJointDistribution p0 = FiniteJointDistribution::from_weights(u, std::move(w));
  if (spec.label_noise > 0.0) {
    p0 = FiniteJointDistribution(u, noised_masses(p0, spec.label_noise));
  }

  SignalMap g;
  g.target_label = spec.target_label < ny ? spec.target_label : rng.uniform_index(ny);
  g.image.resize(nx);
  std::vector<std::size_t> off;
  for (std::size_t x = 0; x < nx; ++x) {
    if (!supported[x]) {
      off.push_back(x);
    }
  }
  for (std::size_t x = 0; x < nx; ++x) {
    g.image[x] = off_support_signal ? off[rng.uniform_index(off.size())] : rng.uniform_index(nx);
  }

  // Idempotent summary: random blocks, each represented by its first
  // supported member. Blocks without mass map their points to themselves.
  const std::size_t blocks = 1 + rng.uniform_index(nx);
  std::vector<std::size_t> block_of(nx);
  for (auto& b : block_of) {
    b = rng.uniform_index(blocks);
  }
  std::vector<std::optional<std::size_t>> rep(blocks);
  for (std::size_t x = 0; x < nx; ++x) {
    if (supported[x] && !rep[block_of[x]]) {
      rep[block_of[x]] = x;
    }
  }
  SignalMap summary = identity_map(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    if (rep[block_of[x]]) {
      summary.image[x] = *rep[block_of[x]];
    }
  }
  return DiscreteScenario{std::move(p0), std::move(g), std::move(summary)};
}

// Features are (content c, trigger slot v), code c * kTriggerSlots + v.
DiscreteScenario synthetic_trigger(const ScenarioSpec& spec, Rng& rng) {
  const std::size_t nc = spec.feature_count;
  const std::size_t ny = spec.label_count;
  const double xi = spec.uniqueness.value_or(0.01);
  const std::size_t reserved = 1 + spec.trigger_encoding;
  auto u = std::make_shared<const Universe>(Universe::dense(nc * kTriggerSlots, ny));
  const std::size_t target = spec.target_label;

  std::vector<double> w(u->size(), 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const double pc = 0.5 + rng.uniform();
    const std::size_t dominant = c % ny;
    std::vector<double> base(ny);
    for (std::size_t y = 0; y < ny; ++y) {
      if (y == dominant) {
        base[y] = 3.0 + rng.exponential();
      } else if (y == target) {
        base[y] = 0.1 + 0.2 * rng.uniform();
      } else {
        base[y] = rng.exponential();
      }
    }
    const double total = std::accumulate(base.begin(), base.end(), 0.0);
    for (std::size_t v = 0; v < kTriggerSlots; ++v) {
      const double pv = v == 0 ? 1.0 - static_cast<double>(kTriggerValues) * xi : xi;
      const std::size_t x = c * kTriggerSlots + v;
      for (std::size_t y = 0; y < ny; ++y) {
        w[u->point(x, y)] = pc * pv * base[y] / total;
      }
    }
  }
  FiniteJointDistribution p0 = FiniteJointDistribution::from_weights(u, std::move(w));
  if (spec.label_noise > 0.0) {
    p0 = FiniteJointDistribution(u, noised_masses(p0, spec.label_noise));
  }

  SignalMap g;
  g.target_label = target;
  g.image.resize(nc * kTriggerSlots);
  for (std::size_t x = 0; x < g.image.size(); ++x) {
    g.image[x] = (x / kTriggerSlots) * kTriggerSlots + reserved;
  }
  // Erasing the trigger slot.
  SignalMap summary = identity_map(nc * kTriggerSlots);
  for (std::size_t x = 0; x < summary.image.size(); ++x) {
    summary.image[x] = (x / kTriggerSlots) * kTriggerSlots;
  }
  return DiscreteScenario{std::move(p0), std::move(g), std::move(summary)};
}

// Features are (kept a, erased s), code a * slots + s. The summary sets s = 0.
DiscreteScenario erasure_demo(const ScenarioSpec& spec, Rng& rng) {
  const std::size_t na = spec.feature_count;
  const std::size_t ny = spec.label_count;
  const std::size_t slots = 3;
  const double kappa = spec.sensitivity;
  auto u = std::make_shared<const Universe>(Universe::dense(na * slots, ny));

  std::vector<double> ps(slots);
  for (auto& p : ps) {
    p = 0.5 + rng.uniform();
  }
  std::vector<double> w(u->size(), 0.0);
  for (std::size_t a = 0; a < na; ++a) {
    const double pa = 0.5 + rng.uniform();
    std::vector<double> base(ny);
    for (auto& b : base) {
      b = rng.exponential() + 1e-3;
    }
    const double total = std::accumulate(base.begin(), base.end(), 0.0);
    for (std::size_t s = 0; s < slots; ++s) {
      const std::size_t x = a * slots + s;
      const std::size_t shifted = (a + s) % ny;
      for (std::size_t y = 0; y < ny; ++y) {
        const double cond = (1.0 - kappa) * base[y] / total + (y == shifted ? kappa : 0.0);
        w[u->point(x, y)] = pa * ps[s] * cond;
      }
    }
  }
  FiniteJointDistribution p0 = FiniteJointDistribution::from_weights(u, std::move(w));
  if (spec.label_noise > 0.0) {
    p0 = FiniteJointDistribution(u, noised_masses(p0, spec.label_noise));
  }
  SignalMap summary = identity_map(na * slots);
  for (std::size_t x = 0; x < summary.image.size(); ++x) {
    summary.image[x] = (x / slots) * slots;
  }
  SignalMap g = summary;
  g.target_label = std::min(spec.target_label, ny - 1);
  return DiscreteScenario{std::move(p0), std::move(g), std::move(summary)};
}

ContinuousScenario linear_demo(const ScenarioSpec& spec, Rng& rng) {
  const std::size_t d = spec.dim;
  Vector w_true(d);
  for (std::size_t i = 0; i < d; ++i) {
    w_true[i] = rng.normal();
  }
  std::vector<Atom> atoms;
  atoms.reserve(spec.atom_count);
  for (std::size_t i = 0; i < spec.atom_count; ++i) {
    Atom a;
    a.x = Vector(d);
    for (std::size_t j = 0; j < d; ++j) {
      a.x[j] = rng.normal();
    }
    a.y = a.x.dot(w_true) + 0.1 * rng.normal();
    a.weight = 0.5 + rng.uniform();
    atoms.push_back(std::move(a));
  }
  DataDistribution p0(std::move(atoms));
  const LossSpec loss = make_loss_spec(LossFamily::squared, spec.ridge_lambda, p0);
  const Vector theta0 = risk_minimize(loss, p0).state.theta;
  Vector dir(d);
  for (std::size_t j = 0; j < d; ++j) {
    dir[j] = rng.normal();
  }
  const double n = dir.norm();
  const double scale = 0.5 + 1.5 * rng.uniform();
  Vector theta_star = n > 0.0 ? Vector(theta0 + dir * (scale / n)) : Vector(theta0 + Vector::Ones(d));
  return ContinuousScenario{std::move(p0), loss, theta0, std::move(theta_star)};
}

}  // namespace

const char* to_string(ScenarioKind kind) { return kKindNames[static_cast<int>(kind)]; }

ScenarioKind scenario_kind_from_string(const std::string& name) {
  for (int i = 0; i < 5; ++i) {
    if (name == kKindNames[i]) {
      return static_cast<ScenarioKind>(i);
    }
  }
  throw ConfigError("unknown scenario kind '" + name + "'");
}

void ScenarioSpec::validate() const {
  if (label_count < 2) {
    throw ConfigError("label_count must be at least 2");
  }
  if (feature_count < 1) {
    throw ConfigError("feature_count must be positive");
  }
  std::size_t features = feature_count;
  if (kind == ScenarioKind::synthetic_trigger) {
    features = feature_count * kTriggerSlots;
  } else if (kind == ScenarioKind::erasure_demo) {
    features = feature_count * 3;
  }
  if (features > kMaxFeatures) {
    throw ConfigError("feature universe of " + std::to_string(features) + " exceeds the cap of " +
                      std::to_string(kMaxFeatures));
  }
  if (features * label_count > 10 * kMaxFeatures) {
    throw ConfigError("universe too large");
  }
  if (dim < 1 || dim > kMaxDim) {
    throw ConfigError("dim must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (atom_count < 1 || atom_count > 100000) {
    throw ConfigError("atom_count must lie in [1, 100000]");
  }
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) {
    throw ConfigError("label_noise must lie in [0, 1]");
  }
  if (!(sensitivity >= 0.0 && sensitivity <= 1.0)) {
    throw ConfigError("sensitivity must lie in [0, 1]");
  }
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
    throw ConfigError("ridge_lambda must be finite and non-negative");
  }
  if (uniqueness && !(*uniqueness >= 0.0 && *uniqueness <= 1.0)) {
    throw ConfigError("uniqueness must lie in [0, 1]");
  }
  if (kind == ScenarioKind::synthetic_trigger) {
    if (uniqueness && *uniqueness * static_cast<double>(kTriggerValues) >= 1.0) {
      throw ConfigError("trigger uniqueness must be below 1/3");
    }
    if (trigger_encoding >= kTriggerValues) {
      throw ConfigError("trigger_encoding must lie in [0, 2]");
    }
  }
  if ((kind == ScenarioKind::synthetic_trigger) && target_label >= label_count) {
    throw ConfigError("target_label out of range");
  }
}

ScenarioBundle generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  ScenarioBundle bundle;
  bundle.spec = spec;
  bundle.id = std::string(to_string(spec.kind)) + "-s" + std::to_string(spec.seed);
  Rng rng(spec.seed);
  switch (spec.kind) {
    case ScenarioKind::random_discrete:
      bundle.discrete = random_discrete(spec, rng);
      break;
    case ScenarioKind::synthetic_trigger:
      bundle.discrete = synthetic_trigger(spec, rng);
      break;
    case ScenarioKind::erasure_demo:
      bundle.discrete = erasure_demo(spec, rng);
      break;
    case ScenarioKind::ridge_demo:
    case ScenarioKind::steering_demo:
      bundle.continuous = linear_demo(spec, rng);
      break;
  }
  return bundle;
}

DiscreteScenario fixture_scenario() {
  auto u = std::make_shared<const Universe>(Universe::dense(3, 3));
  FiniteJointDistribution p0(u, {0.30, 0.10, 0.05, 0.10, 0.25, 0.05, 0.02, 0.03, 0.10});
  SignalMap g;
  g.image = {1, 2, 2};
  g.target_label = 0;
  return DiscreteScenario{std::move(p0), std::move(g), identity_map(3)};
}

FiniteJointDistribution randomize_labels(const FiniteJointDistribution& p0, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ConfigError("label randomization fraction must lie in [0, 1]");
  }
  return FiniteJointDistribution(p0.universe_ptr(), noised_masses(p0, rho));
}

}  // namespace collact
