#pragma once

// Convex risk minimization with one-dimensional GLM losses, the
// gradient-neutralizing collective strategy and its bounds.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace collact {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class LossFamily { squared, logistic };

const char* to_string(LossFamily family);
LossFamily loss_family_from_string(const std::string& name);

struct Atom {
  Vector x;
  double y = 0.0;
  double weight = 1.0;
};

// Finitely supported distribution over (feature vector, scalar label).
class DataDistribution {
 public:
  // Weights must be non-negative with positive total; they are renormalized.
  explicit DataDistribution(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t dim() const { return atoms_.front().x.size(); }
  std::size_t size() const { return atoms_.size(); }

  // E[x x^T].
  Matrix second_moment() const;

 private:
  std::vector<Atom> atoms_;
};

// Loss with the curvature constants the bounds need. Build through
// make_loss_spec so mu and beta are computed from data, not assumed.
struct LossSpec {
  LossFamily family = LossFamily::squared;
  double lambda = 0.0;  // adds (lambda / 2) ||theta||^2 per example
  double mu = 0.0;      // strong convexity of the risk
  double beta = 0.0;    // smoothness of the risk
};

// squared: mu = lambda_min(E[xx^T]) + lambda, beta = lambda_max + lambda.
// logistic: mu = lambda, beta = lambda_max / 4 + lambda.
LossSpec make_loss_spec(LossFamily family, double lambda, const DataDistribution& data);

struct ParamState {
  Vector theta;
  std::size_t dim() const { return static_cast<std::size_t>(theta.size()); }
};

// Mean predictor mu_theta(x): x^T theta (squared) or sigmoid(x^T theta).
double mean_prediction(const LossSpec& loss, const Vector& theta, const Vector& x);

double pointwise_loss(const LossSpec& loss, const Vector& theta, const Atom& atom);

// x (mu_theta(x) - y) + lambda theta.
Vector glm_gradient(const LossSpec& loss, const Vector& theta, const Atom& atom);

// g_P(theta) = E_{z~P} grad l(theta; z).
Vector expected_gradient(const LossSpec& loss, const DataDistribution& p, const Vector& theta);

double risk(const LossSpec& loss, const DataDistribution& p, const Vector& theta);

struct MinimizerResult {
  ParamState state;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
};

// Squared loss: regularized normal equations. Logistic: full-batch gradient
// descent with Armijo backtracking until ||g|| <= tol or max_iterations.
// Throws NonUniqueMinimizerError for lambda = 0 with a singular design.
MinimizerResult risk_minimize(const LossSpec& loss, const DataDistribution& p, double tol = 1e-10,
                              std::size_t max_iterations = 100000);

enum class NeutralizeMode { feature_label, feature_only };

const char* to_string(NeutralizeMode mode);

struct NeutralizerOptions {
  // Feature-label magnitude c = scale * ||g_P0(theta*)||.
  double magnitude_scale = 10.0;
  // Absolute c; overrides the scale when set.
  std::optional<double> magnitude;
};

struct Neutralizer {
  DataDistribution p_prime;
  bool already_neutral = false;
};

// P' whose expected gradient at theta* points exactly opposite g_P0(theta*).
//
// feature_label: one atom realizing -c * g0 / ||g0|| (with lambda = 0 this is
// x' = -g0 / ||g0||, y' = mu(x') - c).
// feature_only: labels kept; atoms with y < mu(x') move to x' = -g0, the rest
// to x' = 0. Needs lambda = 0 (the regularizer term is the same for every atom
// and would tilt the direction) and some atom below the mean prediction.
Neutralizer build_neutralizing_distribution(const LossSpec& loss, const DataDistribution& p0,
                                            const Vector& theta_star, NeutralizeMode mode,
                                            const NeutralizerOptions& options = {});

struct GradientReport {
  Vector g_p0_at_target;
  Vector g_pprime_at_target;
  double angle_check = 0.0;  // cos(g_P', -g_P0)
};

GradientReport gradient_report(const LossSpec& loss, const DataDistribution& p0,
                               const DataDistribution& p_prime, const Vector& theta_star);

// min(1, (1/alpha) ||g0|| / (||g'|| + ||g0||)); 0 when ||g0|| = 0.
double neutralizing_probability(double alpha, double norm_g0, double norm_gprime);

struct NeutralizedMixture {
  DataDistribution firm_view;  // P = (1 - alpha q) P0 + alpha q P'
  double q = 0.0;
};

NeutralizedMixture apply_neutralizing_strategy(const LossSpec& loss, const DataDistribution& p0,
                                               const DataDistribution& p_prime,
                                               const Vector& theta_star, double alpha);

// (1/mu) min(alpha ||g'|| - (1 - alpha) ||g0||, 0). mu = 0 gives -infinity
// unless the min is 0.
double bound_strongly_convex(double alpha, double norm_g0, double norm_gprime, double mu);

// ||g0|| / (||g'|| + ||g0||).
double critical_mass_convex(double norm_g0, double norm_gprime);

struct UtilityCriticalMass {
  double alpha_bound = 0.0;
  Vector theta_target;  // theta0 + grad_u / ||grad_u||^2 * U
};

UtilityCriticalMass utility_critical_mass(const Vector& theta0, const Vector& utility_gradient,
                                          double utility_gain, double beta, double g_lb);

// Minimum of ||g_P'(theta')|| over a deterministic nested sampling of the ball
// ||theta' - theta0|| <= radius, P' the feature-label neutralizer for theta'.
// The first sample is the center; samples 2..n alternate between the sphere
// and the interior along Halton directions, so a larger grid_count only adds
// points.
double estimate_g_lb(const LossSpec& loss, const DataDistribution& p0, const Vector& theta0,
                     double radius, std::size_t grid_count, const NeutralizerOptions& options = {});

// Sampling points used by estimate_g_lb.
std::vector<Vector> ball_samples(const Vector& center, double radius, std::size_t count);

}  // namespace collact
