#include <cmath>
#include <limits>
#include <vector>

#include "collact/classify.hpp"
#include "collact/verify.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace collact;
using namespace collact::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("feature-label bound") {
  CHECK(bound_feature_label(0.1, 0.01, 1.0, 0.0) == doctest::Approx(0.91));
  CHECK(bound_feature_label(0.3, 0.0, 0.7, 0.2) == doctest::Approx(1.0 - 0.2 / 0.8));
  for (double a : {0.01, 0.5, 1.0}) {
    CHECK(bound_feature_label(a, 0.0, 1.0, 0.5) <= 0.0);
    CHECK(bound_feature_label(a, 0.2, 1.0, 0.5) <= 0.0);
  }
  CHECK(bound_feature_label(0.0, 0.01, 1.0, 0.0) == -kInf);
}

TEST_CASE("feature-only bound") {
  CHECK(bound_feature_only(0.1, 0.01, 0.5, 0.0) == doctest::Approx(0.9));
  CHECK(bound_feature_only(0.1, 0.3, 1.0, 0.1) == doctest::Approx(1.0 - 0.1 / 0.9));
  CHECK(bound_feature_only(0.1, 0.01, 0.0, 0.0) == -kInf);
  CHECK(bound_feature_only(0.1, 0.01, 1e-300, 0.0) < -1e200);
}

TEST_CASE("erasure bound") {
  for (double a : {0.001, 0.4, 1.0}) {
    CHECK(bound_erasure(a, 0.0, 0.05) == doctest::Approx(1.0 - 0.05 / 0.95));
  }
  CHECK(bound_erasure(0.5, 0.1, 0.0) == doctest::Approx(0.8));
  CHECK(bound_erasure(1.0, 0.3, 0.01) == doctest::Approx(1.0 - 0.01 / 0.99));
}

TEST_CASE("bounds are monotone") {
  Rng rng(17);
  for (int t = 0; t < 2000; ++t) {
    const double a = rng.uniform();
    const double a2 = a + (1.0 - a) * rng.uniform();
    const double xi = rng.uniform();
    const double xi2 = xi + (1.0 - xi) * rng.uniform();
    const double d = rng.uniform();
    const double d2 = d + (1.0 - d) * rng.uniform();
    const double p = 0.01 + 0.99 * rng.uniform();
    const double e = 0.5 * rng.uniform();
    const double e2 = e + (0.5 - e) * rng.uniform();
    CHECK(bound_feature_label(a2, xi, d, e) >= bound_feature_label(a, xi, d, e));
    CHECK(bound_feature_label(a, xi2, d, e) <= bound_feature_label(a, xi, d, e));
    CHECK(bound_feature_label(a, xi, d2, e) <= bound_feature_label(a, xi, d, e));
    CHECK(bound_feature_label(a, xi, d, e2) <= bound_feature_label(a, xi, d, e));
    CHECK(bound_feature_only(a2, xi, p, e) >= bound_feature_only(a, xi, p, e));
    CHECK(bound_feature_only(a, xi2, p, e) <= bound_feature_only(a, xi, p, e));
    CHECK(bound_feature_only(a, xi, p, e2) <= bound_feature_only(a, xi, p, e));
    CHECK(bound_erasure(a2, d, e) >= bound_erasure(a, d, e));
    CHECK(bound_erasure(a, d2, e) <= bound_erasure(a, d, e));
    CHECK(bound_erasure(a, d, e2) <= bound_erasure(a, d, e));
  }
}

TEST_CASE("critical mass formulas") {
  BoundInputs in;
  in.xi = 0.01;
  in.delta = 1.0;
  in.positivity = 0.5;
  in.tau = 0.0;
  CHECK(*critical_mass_formula(PlantMode::feature_label, 0.9, in, 0.0) == doctest::Approx(0.01 / 0.11));
  CHECK(*critical_mass_formula(PlantMode::feature_only, 0.9, in, 0.0) == doctest::Approx(0.1));
  CHECK(*critical_mass_formula(PlantMode::erasure, 0.9, in, 0.0) == 0.0);
  // Penalty alone exceeds 1 - S*.
  CHECK_FALSE(critical_mass_formula(PlantMode::feature_label, 0.95, in, 0.1).has_value());
  // Feature-only load too large to reach S* by alpha = 1.
  in.xi = 0.5;
  CHECK_FALSE(critical_mass_formula(PlantMode::feature_only, 0.9, in, 0.0).has_value());
}

TEST_CASE("critical mass inverts the bound") {
  Rng rng(23);
  std::size_t checked = 0;
  for (int t = 0; t < 10000; ++t) {
    BoundInputs in;
    in.xi = rng.uniform() * 0.2;
    in.delta = rng.uniform();
    in.positivity = 0.05 + 0.95 * rng.uniform();
    in.tau = rng.uniform() * 0.2;
    const double s_star = 0.05 + 0.9 * rng.uniform();
    const double eps = rng.uniform() < 0.5 ? 0.0 : 0.05 * rng.uniform();
    const PlantMode mode = static_cast<PlantMode>(rng.uniform_index(3));
    const auto a = critical_mass_formula(mode, s_star, in, eps);
    if (!a || *a <= 0.0) {
      continue;
    }
    ++checked;
    CHECK(std::abs(bound_for(mode, *a, in, eps) - s_star) <= 1e-12);
  }
  CHECK(checked > 5000);
}

TEST_CASE("bounds hold for the Bayes firm") {
  VerifyJob job;
  job.scenario_count = 100;
  job.alphas = geometric_grid(1e-4, 1.0, 25);
  job.seed = 4;
  const auto report = verify_bounds(job);
  CHECK(report.rows.size() == 100 * 25 * 3);
  CHECK(report.failures == 0);
}

TEST_CASE("negative control: a sign-flipped bound is caught") {
  VerifyJob job;
  job.scenario_count = 10;
  job.alphas = geometric_grid(1e-4, 1.0, 25);
  job.corrupt_bound = true;
  job.seed = 4;
  CHECK(verify_bounds(job).failures > 0);
}

TEST_CASE("ridge rows: equality at the critical mass") {
  VerifyJob job;
  job.scenario_count = 0;
  job.ridge_count = 20;
  job.alphas = {0.5};
  job.seed = 6;
  const auto report = verify_bounds(job);
  CHECK(report.failures == 0);
  // Rows per scenario: half the critical mass, the critical mass, then the grid.
  for (std::size_t i = 1; i < report.rows.size(); i += 3) {
    CHECK(std::abs(report.rows[i].slack) <= 1e-6);
  }
}

TEST_CASE("epsilon penalty is exceeded by a light signal point") {
  // At alpha = 1 the firm only sees (g(x), y*). A signal point carrying P0 mass
  // m has joint margin m, so the firm may flip it for m / 2 of TV budget. With
  // m in (eps / (1 - eps), 2 eps] the success drop m exceeds the additive
  // penalty of the bound.
  const auto u = dense_universe(2, 2);
  const double m = 0.015;
  const double eps = 0.01;
  const FiniteJointDistribution p0(u, {(1.0 - m) / 2, (1.0 - m) / 2, m / 2, m / 2});
  SignalMap g;
  g.image = {0, 1};
  g.target_label = 0;
  const auto h = feature_label_strategy(u, g);
  const double s = success_plant_exact(p0, g, h, 1.0, Firm{eps});
  const auto st = signal_stats(p0, g);
  CHECK(s == doctest::Approx(1.0 - m));
  CHECK(s < bound_feature_label(1.0, st.uniqueness, st.subopt_gap, eps));
  // A sound penalty at alpha = 1 is 2 eps.
  CHECK(s >= 1.0 - 2.0 * eps);
}
