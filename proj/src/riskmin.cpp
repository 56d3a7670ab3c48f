#include "collact/riskmin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "collact/error.hpp"

namespace collact {

const char* to_string(LossFamily family) {
  return family == LossFamily::squared ? "squared" : "logistic";
}

LossFamily loss_family_from_string(const std::string& name) {
  if (name == "squared") {
    return LossFamily::squared;
  }
  if (name == "logistic") {
    return LossFamily::logistic;
  }
  throw ConfigError("unknown loss family '" + name + "'");
}

const char* to_string(NeutralizeMode mode) {
  return mode == NeutralizeMode::feature_label ? "feature_label" : "feature_only";
}

DataDistribution::DataDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) {
    throw StructuralError("data distribution needs at least one atom");
  }
  const auto d = atoms_.front().x.size();
  if (d == 0) {
    throw StructuralError("atoms need at least one feature");
  }
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (a.x.size() != d) {
      throw StructuralError("atoms have inconsistent dimensions");
    }
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight) || !std::isfinite(a.y) ||
        !a.x.allFinite()) {
      throw StructuralError("atom with invalid weight, label or feature");
    }
    total += a.weight;
  }
  if (!(total > 0.0)) {
    throw StructuralError("data distribution has zero total weight");
  }
  for (auto& a : atoms_) {
    a.weight /= total;
  }
}

Matrix DataDistribution::second_moment() const {
  const auto d = static_cast<Eigen::Index>(dim());
  Matrix m = Matrix::Zero(d, d);
  for (const auto& a : atoms_) {
    m.noalias() += a.weight * a.x * a.x.transpose();
  }
  return m;
}

LossSpec make_loss_spec(LossFamily family, double lambda, const DataDistribution& data) {
  if (!(lambda >= 0.0)) {
    throw StructuralError("regularizer weight must be non-negative");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(data.second_moment(), Eigen::EigenvaluesOnly);
  const double lo = std::max(0.0, eig.eigenvalues().minCoeff());
  const double hi = std::max(0.0, eig.eigenvalues().maxCoeff());
  LossSpec spec;
  spec.family = family;
  spec.lambda = lambda;
  if (family == LossFamily::squared) {
    spec.mu = lo + lambda;
    spec.beta = hi + lambda;
  } else {
    spec.mu = lambda;
    spec.beta = 0.25 * hi + lambda;
  }
  return spec;
}

namespace {

double sigmoid(double s) {
  if (s >= 0.0) {
    return 1.0 / (1.0 + std::exp(-s));
  }
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double softplus(double s) { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); }

}  // namespace

double mean_prediction(const LossSpec& loss, const Vector& theta, const Vector& x) {
  const double s = x.dot(theta);
  return loss.family == LossFamily::squared ? s : sigmoid(s);
}

double pointwise_loss(const LossSpec& loss, const Vector& theta, const Atom& atom) {
  const double s = atom.x.dot(theta);
  const double reg = 0.5 * loss.lambda * theta.squaredNorm();
  if (loss.family == LossFamily::squared) {
    const double r = s - atom.y;
    return 0.5 * r * r + reg;
  }
  return softplus(s) - atom.y * s + reg;
}

Vector glm_gradient(const LossSpec& loss, const Vector& theta, const Atom& atom) {
  const double residual = mean_prediction(loss, theta, atom.x) - atom.y;
  return residual * atom.x + loss.lambda * theta;
}

Vector expected_gradient(const LossSpec& loss, const DataDistribution& p, const Vector& theta) {
  Vector g = Vector::Zero(theta.size());
  for (const auto& a : p.atoms()) {
    const double residual = mean_prediction(loss, theta, a.x) - a.y;
    g.noalias() += (a.weight * residual) * a.x;
  }
  g += loss.lambda * theta;
  return g;
}

double risk(const LossSpec& loss, const DataDistribution& p, const Vector& theta) {
  double r = 0.0;
  for (const auto& a : p.atoms()) {
    r += a.weight * pointwise_loss(loss, theta, a);
  }
  return r;
}

MinimizerResult risk_minimize(const LossSpec& loss, const DataDistribution& p, double tol,
                              std::size_t max_iterations) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  const Matrix second = p.second_moment();
  if (loss.lambda == 0.0) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(second, Eigen::EigenvaluesOnly);
    const double hi = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() <= 1e-12 * hi) {
      throw NonUniqueMinimizerError(
          "second-moment matrix is singular and lambda = 0; the risk minimizer is not unique");
    }
  }

  MinimizerResult result;
  if (loss.family == LossFamily::squared) {
    Matrix a = second + loss.lambda * Matrix::Identity(d, d);
    Vector b = Vector::Zero(d);
    for (const auto& atom : p.atoms()) {
      b.noalias() += (atom.weight * atom.y) * atom.x;
    }
    Vector theta = a.ldlt().solve(b);
    // One step of iterative refinement keeps the residual at rounding level.
    Vector g = a * theta - b;
    theta -= a.ldlt().solve(g);
    result.state.theta = theta;
    result.gradient_norm = expected_gradient(loss, p, theta).norm();
    result.iterations = 1;
    return result;
  }

  const LossSpec spec = make_loss_spec(loss.family, loss.lambda, p);
  const double safe_step = spec.beta > 0.0 ? 1.0 / spec.beta : 1.0;
  Vector theta = Vector::Zero(d);
  double value = risk(loss, p, theta);
  double step = safe_step;
  std::size_t it = 0;
  Vector g = expected_gradient(loss, p, theta);
  while (g.norm() > tol && it < max_iterations) {
    step = std::max(2.0 * step, safe_step);
    const double gg = g.squaredNorm();
    Vector candidate = theta - step * g;
    double cand_value = risk(loss, p, candidate);
    while (step > safe_step && cand_value > value - 0.5 * step * gg) {
      step = std::max(0.5 * step, safe_step);
      candidate = theta - step * g;
      cand_value = risk(loss, p, candidate);
    }
    theta = std::move(candidate);
    value = cand_value;
    g = expected_gradient(loss, p, theta);
    ++it;
  }
  result.state.theta = theta;
  result.gradient_norm = g.norm();
  result.iterations = it;
  return result;
}

Neutralizer build_neutralizing_distribution(const LossSpec& loss, const DataDistribution& p0,
                                            const Vector& theta_star, NeutralizeMode mode,
                                            const NeutralizerOptions& options) {
  const Vector g0 = expected_gradient(loss, p0, theta_star);
  const double n0 = g0.norm();
  if (n0 == 0.0) {
    return Neutralizer{p0, true};
  }
  const Vector direction = g0 / n0;

  if (mode == NeutralizeMode::feature_label) {
    const double c = options.magnitude ? *options.magnitude : options.magnitude_scale * n0;
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw StructuralError("neutralizer magnitude must be positive");
    }
    // Realize the per-example gradient v so that v + lambda theta* = -c g0/||g0||.
    const Vector v = -c * direction - loss.lambda * theta_star;
    const double nv = v.norm();
    Atom atom;
    if (nv == 0.0) {
      atom.x = direction;
      atom.y = mean_prediction(loss, theta_star, atom.x);
    } else {
      atom.x = v / nv;
      atom.y = mean_prediction(loss, theta_star, atom.x) - nv;
    }
    atom.weight = 1.0;
    return Neutralizer{DataDistribution({atom}), false};
  }

  if (loss.lambda != 0.0) {
    throw UnsupportedModeError("feature-only neutralization needs an unregularized loss");
  }
  const Vector moved = -g0;
  const double threshold = mean_prediction(loss, theta_star, moved);
  std::vector<Atom> atoms;
  atoms.reserve(p0.size());
  bool any_below = false;
  for (const auto& a : p0.atoms()) {
    Atom b = a;
    if (a.y < threshold) {
      b.x = moved;
      any_below = any_below || a.weight > 0.0;
    } else {
      b.x = Vector::Zero(moved.size());
    }
    atoms.push_back(std::move(b));
  }
  if (!any_below) {
    throw NoNeutralizerError(
        "no base label lies below the mean prediction at the neutralizing feature");
  }
  return Neutralizer{DataDistribution(std::move(atoms)), false};
}

GradientReport gradient_report(const LossSpec& loss, const DataDistribution& p0,
                               const DataDistribution& p_prime, const Vector& theta_star) {
  GradientReport r;
  r.g_p0_at_target = expected_gradient(loss, p0, theta_star);
  r.g_pprime_at_target = expected_gradient(loss, p_prime, theta_star);
  const double n0 = r.g_p0_at_target.norm();
  const double np = r.g_pprime_at_target.norm();
  if (n0 == 0.0 || np == 0.0) {
    r.angle_check = (n0 == 0.0) ? 1.0 : 0.0;
  } else {
    r.angle_check = -r.g_pprime_at_target.dot(r.g_p0_at_target) / (n0 * np);
  }
  return r;
}

double neutralizing_probability(double alpha, double norm_g0, double norm_gprime) {
  if (norm_g0 == 0.0) {
    return 0.0;
  }
  if (!(alpha > 0.0)) {
    return 1.0;
  }
  return std::min(1.0, norm_g0 / (alpha * (norm_gprime + norm_g0)));
}

NeutralizedMixture apply_neutralizing_strategy(const LossSpec& loss, const DataDistribution& p0,
                                               const DataDistribution& p_prime,
                                               const Vector& theta_star, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw StructuralError("alpha outside [0, 1]");
  }
  const double n0 = expected_gradient(loss, p0, theta_star).norm();
  const double np = expected_gradient(loss, p_prime, theta_star).norm();
  const double q = neutralizing_probability(alpha, n0, np);
  const double moved = alpha * q;
  if (moved == 0.0) {
    return NeutralizedMixture{p0, q};
  }
  std::vector<Atom> atoms;
  atoms.reserve(p0.size() + p_prime.size());
  if (moved < 1.0) {
    for (Atom a : p0.atoms()) {
      a.weight *= 1.0 - moved;
      atoms.push_back(std::move(a));
    }
  }
  for (Atom a : p_prime.atoms()) {
    a.weight *= moved;
    atoms.push_back(std::move(a));
  }
  return NeutralizedMixture{DataDistribution(std::move(atoms)), q};
}

double bound_strongly_convex(double alpha, double norm_g0, double norm_gprime, double mu) {
  const double gap = std::min(alpha * norm_gprime - (1.0 - alpha) * norm_g0, 0.0);
  if (gap == 0.0) {
    return 0.0;
  }
  if (!(mu > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  return gap / mu;
}

double critical_mass_convex(double norm_g0, double norm_gprime) {
  if (norm_g0 == 0.0) {
    return 0.0;
  }
  return norm_g0 / (norm_gprime + norm_g0);
}

UtilityCriticalMass utility_critical_mass(const Vector& theta0, const Vector& utility_gradient,
                                          double utility_gain, double beta, double g_lb) {
  const double n = utility_gradient.norm();
  if (!(n > 0.0)) {
    throw StructuralError("utility gradient at theta0 is zero");
  }
  if (!(g_lb > 0.0)) {
    throw StructuralError("g_lb must be positive");
  }
  UtilityCriticalMass out;
  out.theta_target = theta0 + utility_gradient / (n * n) * utility_gain;
  if (std::isinf(g_lb)) {
    out.alpha_bound = 0.0;
    return out;
  }
  const double num = beta * utility_gain;
  out.alpha_bound = num == 0.0 ? 0.0 : num / (g_lb * n + num);
  return out;
}

namespace {

constexpr std::array<int, 40> kPrimes = {2,   3,   5,   7,   11,  13,  17,  19,  23,  29,
                                         31,  37,  41,  43,  47,  53,  59,  61,  67,  71,
                                         73,  79,  83,  89,  97,  101, 103, 107, 109, 113,
                                         127, 131, 137, 139, 149, 151, 157, 163, 167, 173};

double halton(std::size_t index, int base) {
  double f = 1.0;
  double r = 0.0;
  std::size_t i = index;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::size_t>(base));
    i /= static_cast<std::size_t>(base);
  }
  return r;
}

}  // namespace

std::vector<Vector> ball_samples(const Vector& center, double radius, std::size_t count) {
  const auto d = static_cast<std::size_t>(center.size());
  if (d + 1 > kPrimes.size()) {
    throw StructuralError("ball sampling supports at most 39 dimensions");
  }
  std::vector<Vector> out;
  out.reserve(count);
  if (count == 0) {
    return out;
  }
  out.push_back(center);
  if (radius == 0.0) {
    return out;
  }
  for (std::size_t k = 1; k < count; ++k) {
    // Halton index (k + 1) / 2 shared by a sphere point and an interior point.
    const std::size_t h = (k + 1) / 2;
    Vector dir(center.size());
    for (std::size_t j = 0; j < d; ++j) {
      dir[static_cast<Eigen::Index>(j)] = 2.0 * halton(h, kPrimes[j]) - 1.0;
    }
    if (dir.norm() == 0.0) {
      dir.setZero();
      dir[0] = 1.0;
    }
    dir.normalize();
    double r = radius;
    if (k % 2 == 0) {
      r *= std::pow(halton(h, kPrimes[d]), 1.0 / static_cast<double>(d));
    }
    out.push_back(center + r * dir);
  }
  return out;
}

double estimate_g_lb(const LossSpec& loss, const DataDistribution& p0, const Vector& theta0,
                     double radius, std::size_t grid_count, const NeutralizerOptions& options) {
  if (grid_count == 0) {
    throw StructuralError("grid_count must be positive");
  }
  if (!(radius >= 0.0)) {
    throw StructuralError("radius must be non-negative");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& theta : ball_samples(theta0, radius, grid_count)) {
    const auto n = build_neutralizing_distribution(loss, p0, theta, NeutralizeMode::feature_label,
                                                   options);
    const double norm = n.already_neutral ? 0.0 : expected_gradient(loss, n.p_prime, theta).norm();
    best = std::min(best, norm);
  }
  return best;
}

}  // namespace collact
