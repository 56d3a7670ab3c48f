#include <cmath>
#include <limits>
#include <vector>

#include "collact/error.hpp"
#include "collact/riskmin.hpp"
#include "collact/scenario.hpp"
#include "doctest.h"

using namespace collact;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Atom atom(Vector x, double y, double w = 1.0) { return Atom{std::move(x), y, w}; }

Vector random_vector(Rng& rng, Eigen::Index d, double scale = 1.0) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

DataDistribution sample_data(Rng& rng, Eigen::Index d, std::size_t n, bool binary_labels) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = binary_labels ? (rng.uniform() < 0.5 ? 0.0 : 1.0) : rng.normal();
    atoms.push_back(atom(random_vector(rng, d), y, 0.2 + rng.uniform()));
  }
  return DataDistribution(std::move(atoms));
}

// Central differences of the pointwise loss.
Vector numeric_gradient(const LossSpec& loss, const Vector& theta, const Atom& a) {
  const double h = 1e-5;
  Vector g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vector tp = theta;
    Vector tm = theta;
    tp[i] += h;
    tm[i] -= h;
    g[i] = (pointwise_loss(loss, tp, a) - pointwise_loss(loss, tm, a)) / (2.0 * h);
  }
  return g;
}

ContinuousScenario ridge(std::uint64_t seed, std::size_t dim, std::size_t atoms, double lambda) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::ridge_demo;
  spec.dim = dim;
  spec.atom_count = atoms;
  spec.ridge_lambda = lambda;
  spec.seed = seed;
  return *generate_scenario(spec).continuous;
}

}  // namespace

TEST_CASE("risk minimizer") {
  SUBCASE("one-dimensional normal equations") {
    const DataDistribution p({atom(vec({1.0}), 2.0)});
    const LossSpec loss = make_loss_spec(LossFamily::squared, 0.0, p);
    CHECK(risk_minimize(loss, p).state.theta[0] == doctest::Approx(2.0));
  }
  SUBCASE("already optimal at zero") {
    const DataDistribution sq({atom(vec({3.0}), 0.0)});
    CHECK(risk_minimize(make_loss_spec(LossFamily::squared, 0.0, sq), sq).state.theta[0] == doctest::Approx(0.0));
    const DataDistribution lg({atom(vec({1.0}), 0.5)});
    const auto r = risk_minimize(make_loss_spec(LossFamily::logistic, 0.0, lg), lg);
    CHECK(std::abs(r.state.theta[0]) <= 1e-9);
  }
  SUBCASE("regularized logistic on a separable pair") {
    const DataDistribution p({atom(vec({1.0, 0.5}), 1.0), atom(vec({-1.0, -0.5}), 0.0)});
    const LossSpec loss = make_loss_spec(LossFamily::logistic, 0.1, p);
    const auto r = risk_minimize(loss, p);
    CHECK(r.state.theta.allFinite());
    CHECK(expected_gradient(loss, p, r.state.theta).norm() <= 1e-8);
  }
  SUBCASE("singular design without regularization") {
    const DataDistribution p({atom(vec({1.0, 2.0}), 1.0)});
    CHECK_THROWS_AS(risk_minimize(make_loss_spec(LossFamily::squared, 0.0, p), p), NonUniqueMinimizerError);
  }
  SUBCASE("random ridge problems reach a stationary point") {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
      const auto p = sample_data(rng, 1 + static_cast<Eigen::Index>(rng.uniform_index(8)), 3 + rng.uniform_index(30), false);
      const LossSpec loss = make_loss_spec(LossFamily::squared, 0.05, p);
      CHECK(expected_gradient(loss, p, risk_minimize(loss, p).state.theta).norm() <= 1e-9);
    }
  }
}

TEST_CASE("GLM gradients") {
  SUBCASE("squared loss by hand") {
    const LossSpec loss{LossFamily::squared, 0.0, 0.0, 0.0};
    const Vector g = glm_gradient(loss, vec({0.0, 0.0}), atom(vec({1.0, 0.0}), 1.0));
    CHECK(g[0] == doctest::Approx(-1.0));
    CHECK(g[1] == doctest::Approx(0.0));
  }
  SUBCASE("zero residual") {
    const LossSpec loss{LossFamily::squared, 0.0, 0.0, 0.0};
    const Vector theta = vec({0.3, -1.2});
    const Vector x = vec({2.0, 0.5});
    CHECK(glm_gradient(loss, theta, atom(x, x.dot(theta))).norm() == 0.0);
    const LossSpec lg{LossFamily::logistic, 0.0, 0.0, 0.0};
    CHECK(glm_gradient(lg, vec({0.0, 0.0}), atom(x, 0.5)).norm() == 0.0);
  }
  SUBCASE("match central differences") {
    Rng rng(31);
    for (int t = 0; t < 1000; ++t) {
      const auto d = 1 + static_cast<Eigen::Index>(rng.uniform_index(8));
      const LossSpec loss{t % 2 ? LossFamily::logistic : LossFamily::squared, rng.uniform() < 0.5 ? 0.0 : rng.uniform(), 0.0, 0.0};
      const Vector theta = random_vector(rng, d);
      const Atom a = atom(random_vector(rng, d), t % 2 ? rng.uniform() : rng.normal());
      const Vector g = glm_gradient(loss, theta, a);
      const Vector fd = numeric_gradient(loss, theta, a);
      CHECK((g - fd).norm() <= 1e-6 * std::max(g.norm(), 1e-3));
    }
  }
}

TEST_CASE("curvature constants bracket the Hessian") {
  Rng rng(41);
  for (int t = 0; t < 100; ++t) {
    const auto d = 1 + static_cast<Eigen::Index>(rng.uniform_index(6));
    const bool logistic = t % 2 == 1;
    const auto p = sample_data(rng, d, 2 + rng.uniform_index(20), logistic);
    const LossSpec loss = make_loss_spec(logistic ? LossFamily::logistic : LossFamily::squared, 0.1 * rng.uniform(), p);
    CHECK(loss.mu <= loss.beta);
    const Vector theta = random_vector(rng, d);
    // Hessian by central differences of the analytic expected gradient.
    Matrix hess(d, d);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < d; ++i) {
      Vector tp = theta;
      Vector tm = theta;
      tp[i] += h;
      tm[i] -= h;
      hess.col(i) = (expected_gradient(loss, p, tp) - expected_gradient(loss, p, tm)) / (2.0 * h);
    }
    for (int k = 0; k < 10; ++k) {
      const Vector dir = random_vector(rng, d);
      const double q = dir.dot(hess * dir);
      CHECK(q >= loss.mu * dir.squaredNorm() - 1e-6 * dir.squaredNorm());
      CHECK(q <= loss.beta * dir.squaredNorm() + 1e-6 * dir.squaredNorm());
    }
  }
}

TEST_CASE("neutralizing distribution") {
  // Two axis atoms with E[xx^T] = I / 2; labels chosen so g_P0(0) = (1, 0).
  const DataDistribution p0({atom(vec({1.0, 0.0}), -2.0), atom(vec({0.0, 1.0}), 0.0)});
  const LossSpec loss = make_loss_spec(LossFamily::squared, 0.0, p0);
  const Vector target = vec({0.0, 0.0});

  SUBCASE("target already optimal") {
    const Vector theta0 = risk_minimize(loss, p0).state.theta;
    const auto n = build_neutralizing_distribution(loss, p0, theta0, NeutralizeMode::feature_label);
    CHECK(n.already_neutral);
    CHECK(n.p_prime.size() == p0.size());
  }
  SUBCASE("hand-built single atom") {
    NeutralizerOptions opt;
    opt.magnitude = 2.0;
    const auto n = build_neutralizing_distribution(loss, p0, target, NeutralizeMode::feature_label, opt);
    REQUIRE(n.p_prime.size() == 1);
    const Atom& a = n.p_prime.atoms()[0];
    CHECK(a.x[0] == doctest::Approx(-1.0));
    CHECK(a.x[1] == doctest::Approx(0.0));
    CHECK(a.y == doctest::Approx(-2.0));
    const auto rep = gradient_report(loss, p0, n.p_prime, target);
    CHECK(rep.g_p0_at_target[0] == doctest::Approx(1.0));
    CHECK(rep.g_pprime_at_target[0] == doctest::Approx(-2.0));
    CHECK(rep.g_pprime_at_target[1] == doctest::Approx(0.0));
    CHECK(rep.angle_check == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("feature-only without a qualifying atom") {
    const DataDistribution high({atom(vec({1.0, 0.0}), 2.0), atom(vec({0.0, 1.0}), 1.0)});
    const LossSpec l = make_loss_spec(LossFamily::squared, 0.0, high);
    CHECK_THROWS_AS(build_neutralizing_distribution(l, high, target, NeutralizeMode::feature_only), NoNeutralizerError);
  }
  SUBCASE("feature-only needs lambda = 0") {
    const LossSpec l = make_loss_spec(LossFamily::squared, 0.1, p0);
    CHECK_THROWS_AS(build_neutralizing_distribution(l, p0, vec({1.0, 1.0}), NeutralizeMode::feature_only),
                    UnsupportedModeError);
  }
  SUBCASE("feature-only keeps labels and points opposite") {
    const auto n = build_neutralizing_distribution(loss, p0, target, NeutralizeMode::feature_only);
    CHECK(gradient_report(loss, p0, n.p_prime, target).angle_check == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("random scenarios give exactly opposite gradients") {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      const bool logistic = t % 3 == 0;
      const auto d = 1 + static_cast<Eigen::Index>(rng.uniform_index(6));
      const auto p = sample_data(rng, d, d + 2 + rng.uniform_index(10), logistic);
      const LossSpec l = make_loss_spec(logistic ? LossFamily::logistic : LossFamily::squared,
                                        t % 2 ? 0.0 : 0.1, p);
      const Vector ts = random_vector(rng, d);
      for (auto mode : {NeutralizeMode::feature_label, NeutralizeMode::feature_only}) {
        try {
          const auto n = build_neutralizing_distribution(l, p, ts, mode);
          CHECK(std::abs(gradient_report(l, p, n.p_prime, ts).angle_check - 1.0) <= 1e-9);
        } catch (const NoNeutralizerError&) {
        } catch (const UnsupportedModeError&) {
        }
      }
    }
  }
}

TEST_CASE("neutralizing probability and mixture") {
  CHECK(neutralizing_probability(0.05, 1.0, 9.0) == 1.0);
  CHECK(neutralizing_probability(1.0, 3.0, 3.0) == doctest::Approx(0.5));
  CHECK(neutralizing_probability(0.3, 0.0, 3.0) == 0.0);
  const DataDistribution p0({atom(vec({1.0}), 1.0), atom(vec({2.0}), 0.0)});
  const LossSpec loss = make_loss_spec(LossFamily::squared, 0.0, p0);
  const Vector theta0 = risk_minimize(loss, p0).state.theta;
  const auto n = build_neutralizing_distribution(loss, p0, theta0, NeutralizeMode::feature_label);
  const auto mix = apply_neutralizing_strategy(loss, p0, n.p_prime, theta0, 0.4);
  CHECK(mix.q == 0.0);
  CHECK(mix.firm_view.size() == p0.size());
}

TEST_CASE("convex bounds") {
  CHECK(bound_strongly_convex(0.05, 1.0, 9.0, 2.0) == doctest::Approx(-0.25));
  CHECK(bound_strongly_convex(0.1, 1.0, 9.0, 2.0) == doctest::Approx(0.0));
  CHECK(bound_strongly_convex(1.0, 1.0, 0.5, 2.0) == 0.0);
  CHECK(critical_mass_convex(1.0, 9.0) == doctest::Approx(0.1));
  CHECK(critical_mass_convex(0.0, 9.0) == 0.0);
  CHECK(critical_mass_convex(2.5, 2.5) == doctest::Approx(0.5));
}

TEST_CASE("utility critical mass") {
  const Vector theta0 = vec({1.0, 2.0});
  const Vector grad_u = vec({0.0, 1.0});
  const auto r = utility_critical_mass(theta0, grad_u, 1.0, 1.0, 9.0);
  CHECK(r.alpha_bound == doctest::Approx(0.1));
  CHECK(r.theta_target[0] == doctest::Approx(1.0));
  CHECK(r.theta_target[1] == doctest::Approx(3.0));
  CHECK(utility_critical_mass(theta0, grad_u, 0.0, 1.0, 9.0).alpha_bound == 0.0);
  CHECK(utility_critical_mass(theta0, grad_u, 1.0, 1.0, 1e300).alpha_bound <= 1e-299);
}

TEST_CASE("gradient lower bound estimate") {
  // H = h I via four axis atoms of length sqrt(2h); minimizer at theta_min.
  const double h = 1.5;
  const double a = std::sqrt(2.0 * h);
  const Vector theta_min = vec({0.4, -0.2});
  std::vector<Atom> atoms;
  for (int s : {1, -1}) {
    for (int i = 0; i < 2; ++i) {
      Vector x = Vector::Zero(2);
      x[i] = s * a;
      atoms.push_back(atom(x, x.dot(theta_min), 0.25));
    }
  }
  const DataDistribution p0(std::move(atoms));
  const LossSpec loss = make_loss_spec(LossFamily::squared, 0.0, p0);
  const Vector theta0 = vec({2.4, 1.3});
  const double dist = (theta0 - theta_min).norm();

  SUBCASE("zero radius is the center value") {
    CHECK(estimate_g_lb(loss, p0, theta0, 0.0, 50) == doctest::Approx(10.0 * h * dist));
  }
  SUBCASE("nonincreasing in the grid size") {
    double prev = estimate_g_lb(loss, p0, theta0, 1.0, 1);
    for (std::size_t n : {2u, 10u, 100u, 1000u}) {
      const double v = estimate_g_lb(loss, p0, theta0, 1.0, n);
      CHECK(v <= prev);
      prev = v;
    }
  }
  SUBCASE("matches the closed form on a large grid") {
    const double r = 1.0;
    const double closed = 10.0 * h * std::max(0.0, dist - r);
    CHECK(std::abs(estimate_g_lb(loss, p0, theta0, r, 1000) - closed) <= 0.02 * closed);
  }
  SUBCASE("nested samples") {
    const auto small = ball_samples(theta0, 1.0, 10);
    const auto big = ball_samples(theta0, 1.0, 100);
    for (std::size_t i = 0; i < small.size(); ++i) {
      CHECK((small[i] - big[i]).norm() == 0.0);
    }
    CHECK((small[0] - theta0).norm() == 0.0);
  }
}

TEST_CASE("neutralized ridge firms land on or near the target") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const auto s = ridge(seed, 1 + rng.uniform_index(8), 12 + rng.uniform_index(30), 0.01 + 0.2 * rng.uniform());
    const auto n = build_neutralizing_distribution(s.loss, s.p0, s.theta_star, NeutralizeMode::feature_label);
    const auto rep = gradient_report(s.loss, s.p0, n.p_prime, s.theta_star);
    const double n0 = rep.g_p0_at_target.norm();
    const double np = rep.g_pprime_at_target.norm();
    const double a_star = critical_mass_convex(n0, np);
    for (double alpha : {0.25 * a_star, 0.5 * a_star, a_star, std::min(1.0, 2.0 * a_star), 1.0}) {
      const auto mix = apply_neutralizing_strategy(s.loss, s.p0, n.p_prime, s.theta_star, alpha);
      const LossSpec firm = make_loss_spec(s.loss.family, s.loss.lambda, mix.firm_view);
      const double d = (risk_minimize(firm, mix.firm_view).state.theta - s.theta_star).norm();
      CHECK(d <= -bound_strongly_convex(alpha, n0, np, firm.mu) + 1e-6);
      if (alpha >= a_star) {
        CHECK(d <= 1e-6);
      }
    }
  }
}
