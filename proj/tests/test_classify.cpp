#include <cmath>
#include <memory>
#include <vector>

#include "collact/classify.hpp"
#include "collact/error.hpp"
#include "collact/scenario.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace collact;
using namespace collact::testing;

namespace {

SignalMap make_map(std::vector<std::size_t> image, std::optional<std::size_t> target = std::nullopt) {
  SignalMap g;
  g.image = std::move(image);
  g.target_label = target;
  return g;
}

// Success event "f(x0) = y0" for the one-feature adversary examples.
double first_is_zero(const ClassifierModel& f) { return f(0) == 0 ? 1.0 : 0.0; }

}  // namespace

TEST_CASE("bayes classifier") {
  const auto u = dense_universe(2, 2);
  SUBCASE("argmax per feature") {
    const FiniteJointDistribution p(u, {0.4, 0.1, 0.2, 0.3});
    const auto f = bayes_classifier(p);
    CHECK(f(0) == 0);
    CHECK(f(1) == 1);
    CHECK(f.provenance == ClassifierProvenance::bayes_exact);
  }
  SUBCASE("uniform conditional picks the smallest label") {
    const FiniteJointDistribution p(u, {0.25, 0.25, 0.1, 0.4});
    CHECK(bayes_classifier(p)(0) == 0);
  }
  SUBCASE("point mass") {
    const auto p = FiniteJointDistribution::point_mass(u, 1, 1);
    CHECK(bayes_classifier(p)(1) == 1);
    // x0 has no mass: modal label of P.
    CHECK(bayes_classifier(p)(0) == 1);
  }
  SUBCASE("fallback is overridable") {
    const auto p = FiniteJointDistribution::point_mass(u, 1, 1);
    const auto f = bayes_classifier(p, [](const FiniteJointDistribution&) { return std::size_t{0}; });
    CHECK(f(0) == 0);
  }
  SUBCASE("pure function of the table") {
    Rng rng(5);
    const auto p = random_pmf(dense_universe(6, 3), rng);
    const auto q = FiniteJointDistribution(p.universe_ptr(), std::vector<double>(p.masses().begin(), p.masses().end()));
    CHECK(bayes_classifier(p).decision == bayes_classifier(q).decision);
  }
}

TEST_CASE("adversarial epsilon-optimal classifier") {
  const auto u = dense_universe(1, 2);
  const FiniteJointDistribution p(u, {0.53, 0.47});  // joint margin 0.06

  SUBCASE("eps = 0 is Bayes") {
    CHECK(eps_adversarial_classifier(p, 0.0, first_is_zero).decision == bayes_classifier(p).decision);
  }
  SUBCASE("cost above budget: no flip") {
    const auto fit = eps_adversarial_fit(p, 0.02, first_is_zero);
    CHECK(fit.flips == 0);
    CHECK(fit.model(0) == 0);
  }
  SUBCASE("cost within budget: flipped") {
    const auto fit = eps_adversarial_fit(p, 0.04, first_is_zero);
    CHECK(fit.flips == 1);
    CHECK(fit.model(0) == 1);
    CHECK(fit.budget_used == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(tv_distance(p, fit.perturbed) <= 0.04 + 1e-12);
  }
  SUBCASE("flips only when it hurts the collective") {
    const auto fit = eps_adversarial_fit(p, 0.5, [](const ClassifierModel& f) { return f(0) == 1 ? 1.0 : 0.0; });
    CHECK(fit.flips == 0);
    CHECK(fit.model(0) == 0);
  }
}

TEST_CASE("adversarial fit is a genuine epsilon-optimal classifier") {
  // Oracle: the returned rule must be an argmax of its certificate P' at every
  // supported point, and P' must lie within TV eps of P.
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t nx = 2 + rng.uniform_index(12);
    const std::size_t ny = 2 + rng.uniform_index(4);
    const auto u = dense_universe(nx, ny);
    const auto p = random_pmf(u, rng, 0.3);
    const double eps = 0.2 * rng.uniform();
    const std::size_t target = rng.uniform_index(ny);
    const auto event = [&](const ClassifierModel& f) {
      double s = 0.0;
      for (std::size_t x = 0; x < nx; ++x) {
        s += f(x) == target ? p.marginal(x) : 0.0;
      }
      return s;
    };
    const auto fit = eps_adversarial_fit(p, eps, event);
    REQUIRE(tv_distance(p, fit.perturbed) <= eps + 1e-12);
    for (std::size_t x = 0; x < nx; ++x) {
      if (p.marginal(x) <= 0.0) {
        continue;
      }
      double best = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        best = std::max(best, fit.perturbed.mass(x, y));
      }
      CHECK(fit.perturbed.mass(x, fit.model(x)) >= best - 1e-12);
    }
    CHECK(event(fit.model) <= event(bayes_classifier(p)) + 1e-12);
  }
}

TEST_CASE("feature-label strategy") {
  SUBCASE("identity map and labels already y*") {
    const auto u = dense_universe(3, 2);
    const auto h = feature_label_strategy(u, make_map({0, 1, 2}, 0));
    const FiniteJointDistribution p0(u, {0.2, 0.0, 0.5, 0.0, 0.3, 0.0});
    const auto pushed = pushforward(p0, h);
    for (std::size_t z = 0; z < u->size(); ++z) {
      CHECK(pushed.mass_at(z) == doctest::Approx(p0.mass_at(z)));
    }
  }
  SUBCASE("kernel row is the point mass at (g(x), y*)") {
    const auto u = dense_universe(8, 2);
    std::vector<std::size_t> img(8);
    for (std::size_t i = 0; i < 8; ++i) img[i] = i;
    img[0] = 7;
    const auto h = feature_label_strategy(u, make_map(img, 0));
    const auto& row = h.row(u->point(0, 1));
    REQUIRE(row.size() == 1);
    CHECK(row[0].first == u->point(7, 0));
    CHECK(row[0].second == 1.0);
  }
  SUBCASE("all pushed mass sits on y*") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      const auto u = dense_universe(5, 3);
      const auto p0 = random_pmf(u, rng);
      std::vector<std::size_t> img(5);
      for (auto& v : img) v = rng.uniform_index(5);
      const auto pushed = pushforward(p0, feature_label_strategy(u, make_map(img, 2)));
      double on_target = 0.0;
      for (std::size_t x = 0; x < 5; ++x) on_target += pushed.mass(x, 2);
      CHECK(on_target == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("missing target") {
    const auto u = dense_universe(2, 2);
    CHECK_THROWS_AS(feature_label_strategy(u, make_map({0, 1})), MissingTargetError);
  }
}

TEST_CASE("feature-only strategy") {
  const auto u = dense_universe(4, 2);
  SUBCASE("no target mass: pushforward is p0") {
    const FiniteJointDistribution p0(u, {0.0, 0.25, 0.0, 0.25, 0.0, 0.25, 0.0, 0.25});
    const auto pushed = pushforward(p0, feature_only_strategy(u, make_map({1, 2, 3, 0}, 0)));
    for (std::size_t z = 0; z < u->size(); ++z) {
      CHECK(pushed.mass_at(z) == p0.mass_at(z));
    }
  }
  SUBCASE("rows by definition") {
    const auto h = feature_only_strategy(u, make_map({2, 2, 2, 3}, 0));
    CHECK(h.row(u->point(0, 0)) == Strategy::Row{{u->point(2, 0), 1.0}});
    CHECK(h.row(u->point(0, 1)) == Strategy::Row{{u->point(0, 1), 1.0}});
  }
  SUBCASE("injective map into fresh points moves the target mass") {
    // x0, x1 carry mass; x2, x3 are fresh.
    const FiniteJointDistribution p0(u, {0.3, 0.2, 0.2, 0.3, 0.0, 0.0, 0.0, 0.0});
    const auto pushed = pushforward(p0, feature_only_strategy(u, make_map({2, 3, 2, 3}, 0)));
    CHECK(pushed.marginal(2) + pushed.marginal(3) == doctest::Approx(0.5));
  }
}

TEST_CASE("erasure strategy") {
  const auto u = dense_universe(2, 2);
  SUBCASE("identity summary relabels by the own conditional argmax") {
    const FiniteJointDistribution p0(u, {0.3, 0.2, 0.1, 0.4});
    const auto es = erasure_strategy(p0, make_map({0, 1}));
    CHECK(es.strategy.row(u->point(0, 1)) == Strategy::Row{{u->point(0, 0), 1.0}});
    CHECK(es.strategy.row(u->point(1, 0)) == Strategy::Row{{u->point(1, 1), 1.0}});
    CHECK_FALSE(es.fallback_used());
  }
  SUBCASE("collapsed pair takes the representative's argmax") {
    const FiniteJointDistribution p0(u, {0.45, 0.05, 0.1, 0.4});  // P0(y|x0) = {0.9, 0.1}
    const auto es = erasure_strategy(p0, make_map({0, 0}));
    for (std::size_t x = 0; x < 2; ++x) {
      for (std::size_t y = 0; y < 2; ++y) {
        CHECK(es.strategy.row(u->point(x, y)) == Strategy::Row{{u->point(x, 0), 1.0}});
      }
    }
  }
  SUBCASE("labels already a function of g(x): conditional law unchanged") {
    const auto u4 = dense_universe(4, 2);
    const FiniteJointDistribution p0(u4, {0.2, 0.0, 0.3, 0.0, 0.0, 0.1, 0.0, 0.4});
    const auto g = make_map({0, 0, 2, 2});
    const auto pushed = pushforward(p0, erasure_strategy(p0, g).strategy);
    for (std::size_t z = 0; z < u4->size(); ++z) {
      CHECK(pushed.mass_at(z) == doctest::Approx(p0.mass_at(z)));
    }
  }
  SUBCASE("summary without mass falls back to the own argmax") {
    const FiniteJointDistribution p0(u, {0.2, 0.8, 0.0, 0.0});
    const auto es = erasure_strategy(p0, make_map({1, 1}));
    CHECK(es.fallback_used());
    CHECK(es.strategy.row(u->point(0, 0)) == Strategy::Row{{u->point(0, 1), 1.0}});
  }
}

TEST_CASE("exact planting success") {
  SUBCASE("off-support signal: success 1 for every alpha > 0") {
    const auto u = dense_universe(4, 3);
    const FiniteJointDistribution p0(u, {0.1, 0.2, 0.1, 0.3, 0.1, 0.2, 0, 0, 0, 0, 0, 0});
    const auto g = make_map({2, 3, 2, 3}, 1);
    const auto h = feature_label_strategy(u, g);
    for (double a : {1e-9, 1e-4, 0.01, 0.3, 1.0}) {
      CHECK(success_plant_exact(p0, g, h, a, Firm{}) == 1.0);
    }
  }
  SUBCASE("alpha = 0 and y* never chosen on the image") {
    const auto u = dense_universe(2, 2);
    const FiniteJointDistribution p0(u, {0.1, 0.4, 0.1, 0.4});
    const auto g = make_map({1, 1}, 0);
    CHECK(success_plant_exact(p0, g, feature_label_strategy(u, g), 0.0, Firm{}) == 0.0);
  }
  SUBCASE("fixture scenario against the brute-force oracle") {
    const auto s = fixture_scenario();
    const auto h = feature_label_strategy(s.p0.universe_ptr(), s.signal);
    const auto hf = feature_only_strategy(s.p0.universe_ptr(), s.signal);
    for (double a : {0.0, 0.05, 0.1, 0.2, 0.3, 0.6, 1.0}) {
      CHECK(success_plant_exact(s.p0, s.signal, h, a, Firm{}) ==
            doctest::Approx(oracle_plant_success(s.p0, s.signal, 0, OraclePlant::feature_label, a)));
      CHECK(success_plant_exact(s.p0, s.signal, hf, a, Firm{}) ==
            doctest::Approx(oracle_plant_success(s.p0, s.signal, 0, OraclePlant::feature_only, a)));
    }
    CHECK(success_plant_exact(s.p0, s.signal, h, 0.05, Firm{}) == 0.0);
    CHECK(success_plant_exact(s.p0, s.signal, h, 0.2, Firm{}) == doctest::Approx(0.55));
    CHECK(success_plant_exact(s.p0, s.signal, h, 0.3, Firm{}) == doctest::Approx(1.0));
  }
  SUBCASE("random scenarios against the brute-force oracle") {
    Rng rng(21);
    for (int t = 0; t < 400; ++t) {
      const std::size_t nx = 2 + rng.uniform_index(20);
      const std::size_t ny = 2 + rng.uniform_index(4);
      const auto u = dense_universe(nx, ny);
      const auto p0 = random_pmf(u, rng, 0.4);
      std::vector<std::size_t> img(nx);
      for (auto& v : img) v = rng.uniform_index(nx);
      const std::size_t target = rng.uniform_index(ny);
      const auto g = make_map(img, target);
      const double a = rng.uniform();
      CHECK(success_plant_exact(p0, g, feature_label_strategy(u, g), a, Firm{}) ==
            doctest::Approx(oracle_plant_success(p0, g, target, OraclePlant::feature_label, a)).epsilon(1e-12));
      CHECK(success_plant_exact(p0, g, feature_only_strategy(u, g), a, Firm{}) ==
            doctest::Approx(oracle_plant_success(p0, g, target, OraclePlant::feature_only, a)).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact erasure success") {
  const auto u = dense_universe(4, 2);
  const FiniteJointDistribution p0(u, {0.1, 0.2, 0.25, 0.05, 0.15, 0.05, 0.05, 0.15});
  SUBCASE("identity summary") {
    for (double a : {0.0, 0.2, 1.0}) {
      CHECK(success_erase_exact(p0, make_map({0, 1, 2, 3}), a, Firm{}) == doctest::Approx(1.0));
    }
  }
  SUBCASE("alpha = 1 erases completely") {
    CHECK(success_erase_exact(p0, make_map({0, 0, 2, 2}), 1.0, Firm{}) == doctest::Approx(1.0));
  }
  SUBCASE("alpha = 0 when f already factors through g") {
    const FiniteJointDistribution q(u, {0.3, 0.1, 0.2, 0.1, 0.05, 0.1, 0.05, 0.1});
    CHECK(success_erase_exact(q, make_map({0, 0, 2, 2}), 0.0, Firm{}) == doctest::Approx(1.0));
  }
  SUBCASE("alpha = 0 when it does not") {
    // f = (1, 0, 0, 1): x1 and x3 disagree with their representatives.
    CHECK(success_erase_exact(p0, make_map({0, 0, 2, 2}), 0.0, Firm{}) == doctest::Approx(0.5));
  }
}

TEST_CASE("scenario statistics") {
  const auto u = dense_universe(4, 3);
  SUBCASE("fresh signal points give xi = 0") {
    const FiniteJointDistribution p0(u, {0.2, 0.2, 0.1, 0.2, 0.2, 0.1, 0, 0, 0, 0, 0, 0});
    const auto st = signal_stats(p0, make_map({2, 3, 2, 3}, 0));
    CHECK(st.uniqueness == 0.0);
    CHECK(st.subopt_gap == 0.0);
  }
  SUBCASE("constant positivity") {
    // P0(y*=0|x) = 0.3 everywhere.
    const FiniteJointDistribution p0(u, {0.075, 0.1, 0.075, 0.075, 0.15, 0.025, 0.075, 0.05, 0.125, 0.075, 0.175, 0.0});
    const auto st = signal_stats(p0, make_map({0, 1, 2, 3}, 0));
    CHECK(st.positivity == doctest::Approx(0.3));
    const double expected[] = {0.1, 0.3, 0.2, 0.4};
    for (std::size_t x = 0; x < 4; ++x) {
      CHECK(st.per_point_gaps[x] == doctest::Approx(expected[x]));
    }
    CHECK(st.subopt_gap == doctest::Approx(0.4));
    CHECK(st.uniqueness == doctest::Approx(1.0));
  }
  SUBCASE("zero-mass signal points are left out of the gap") {
    const FiniteJointDistribution p0(u, {0.1, 0.3, 0.1, 0.5, 0.0, 0.0, 0, 0, 0, 0, 0, 0});
    const auto st = signal_stats(p0, make_map({0, 2, 2, 2}, 0));
    CHECK(st.subopt_gap == doctest::Approx(0.4));
    CHECK(st.positivity == doctest::Approx(0.2));
  }
  SUBCASE("labels independent of the erased coordinate") {
    const FiniteJointDistribution p0(u, {0.1, 0.1, 0.2, 0.05, 0.05, 0.1, 0.1, 0.1, 0.0, 0.1, 0.1, 0.0});
    const auto es = erasure_stats(p0, make_map({0, 0, 2, 2}));
    CHECK(es.sensitivity == doctest::Approx(0.0));
  }
  SUBCASE("tau is the weighted mean of the per-point table") {
    Rng rng(8);
    const auto p0 = random_pmf(u, rng);
    const auto es = erasure_stats(p0, make_map({0, 0, 2, 2}));
    double mean = 0.0;
    for (std::size_t x = 0; x < 4; ++x) mean += p0.marginal(x) * es.per_point[x];
    CHECK(es.sensitivity == doctest::Approx(mean).epsilon(1e-12));
  }
  SUBCASE("summary with zero mass is rejected") {
    const FiniteJointDistribution p0(u, {0.2, 0.2, 0.1, 0.2, 0.2, 0.1, 0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(erasure_stats(p0, make_map({2, 2, 2, 3})), UndefinedConditionalError);
  }
}

TEST_CASE("truncated positivity") {
  const auto u = dense_universe(3, 2);
  const FiniteJointDistribution p0(u, {0.2, 0.2, 0.0, 0.3, 0.1, 0.2});
  const auto st = signal_stats(p0, make_map({0, 1, 2}, 0));
  CHECK(truncated_positivity(p0, {0, 1, 2}, 0).positivity == doctest::Approx(st.positivity));
  const auto r = truncated_positivity(p0, {0, 2}, 0);
  CHECK(r.positivity == doctest::Approx(1.0 / 3.0));
  CHECK(r.retained_mass == doctest::Approx(0.7));
  CHECK(truncated_positivity(p0, {0}, 0).positivity == doctest::Approx(0.5));
  const FiniteJointDistribution q(u, {0.5, 0.5, 0.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_AS(truncated_positivity(q, {1, 2}, 0), EmptyRegionError);
}

TEST_CASE("empirical critical mass") {
  SuccessCurve c;
  c.points = {{0.1, 0.2, 0.0, EvalMode::exact}, {0.2, 0.95, 0.0, EvalMode::exact}};
  CHECK(*empirical_critical_mass(c, 0.9) == doctest::Approx(0.1 + 0.1 * 0.7 / 0.75));
  CHECK(*empirical_critical_mass(c, 0.1) == 0.1);
  CHECK_FALSE(empirical_critical_mass(c, 0.96).has_value());
}

TEST_CASE("Monte Carlo success") {
  const auto s = fixture_scenario();
  const auto h = feature_label_strategy(s.p0.universe_ptr(), s.signal);
  SUBCASE("alpha = 0 where the base firm never predicts y* on the image") {
    Rng rng(1);
    const auto est = success_plant_mc(s.p0, s.signal, h, 0.0, Firm{}, 4000, 4000, rng);
    CHECK(est.success <= 3.0 * est.std_error + 1e-12);
  }
  SUBCASE("alpha = 1 with an off-support signal") {
    const auto u = dense_universe(4, 2);
    const FiniteJointDistribution p0(u, {0.3, 0.2, 0.1, 0.4, 0, 0, 0, 0});
    const auto g = make_map({2, 3, 2, 3}, 1);
    Rng rng(2);
    const auto est = success_plant_mc(p0, g, feature_label_strategy(u, g), 1.0, Firm{}, 2000, 2000, rng);
    CHECK(std::abs(est.success - 1.0) <= 3.0 * est.std_error + 1e-12);
  }
  SUBCASE("agrees with the exact value away from thresholds") {
    std::size_t ok = 0;
    const std::size_t trials = 500;
    const double alphas[] = {0.05, 0.2, 0.5};
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng = Rng(99).fork(t);
      const double a = alphas[t % 3];
      const double exact = success_plant_exact(s.p0, s.signal, h, a, Firm{});
      const auto est = success_plant_mc(s.p0, s.signal, h, a, Firm{}, 5000, 2000, rng);
      ok += std::abs(est.success - exact) <= 3.0 * est.std_error + 1e-12 ? 1 : 0;
    }
    CHECK(static_cast<double>(ok) >= 0.99 * trials);
  }
  SUBCASE("same seed, same estimate") {
    Rng a(7);
    Rng b(7);
    const auto e1 = success_plant_mc(s.p0, s.signal, h, 0.2, Firm{}, 1000, 1000, a);
    const auto e2 = success_plant_mc(s.p0, s.signal, h, 0.2, Firm{}, 1000, 1000, b);
    CHECK(e1.success == e2.success);
    CHECK(e1.std_error == e2.std_error);
  }
  SUBCASE("erasure agrees with the exact value") {
    const auto u = dense_universe(4, 2);
    const FiniteJointDistribution p0(u, {0.1, 0.2, 0.25, 0.05, 0.15, 0.05, 0.05, 0.15});
    const auto g = make_map({0, 0, 2, 2});
    Rng rng(4);
    const auto est = success_erase_mc(p0, g, 1.0, Firm{}, 3000, 3000, rng);
    CHECK(std::abs(est.success - success_erase_exact(p0, g, 1.0, Firm{})) <= 3.0 * est.std_error + 1e-12);
  }
}
