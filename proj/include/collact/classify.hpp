#pragma once

// Firms as (epsilon-)optimal classifiers on a finite universe, the collective
// strategies for planting and erasing a signal, exact and Monte Carlo success
// measurement, and the closed-form success bounds with their critical masses.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "collact/curve.hpp"
#include "collact/probkit.hpp"
#include "collact/rng.hpp"

namespace collact {

enum class ClassifierProvenance { bayes_exact, eps_adversarial };

struct ClassifierModel {
  std::vector<std::size_t> decision;  // label index per feature index
  ClassifierProvenance provenance = ClassifierProvenance::bayes_exact;
  double eps = 0.0;

  std::size_t operator()(std::size_t x) const { return decision.at(x); }
};

// Label assigned to feature points with P(x) = 0.
using FallbackRule = std::function<std::size_t(const FiniteJointDistribution&)>;

// Most frequent label under P, ties to the smallest index. The default
// FallbackRule.
std::size_t global_modal_label(const FiniteJointDistribution& p);

// argmax_y P(y|x) with ties to the smallest label; zero-mass x use `fallback`.
ClassifierModel bayes_classifier(const FiniteJointDistribution& p,
                                 const FallbackRule& fallback = global_modal_label);

// Success of the collective as a function of the deployed classifier.
using SuccessEvent = std::function<double(const ClassifierModel&)>;

struct AdversarialFit {
  ClassifierModel model;
  // The distribution P' within TV eps whose argmax `model` is. At flipped
  // points P' holds an exact tie and `model` picks the flipped label.
  FiniteJointDistribution perturbed;
  double budget_used = 0.0;
  std::size_t flips = 0;
};

// Worst epsilon-optimal classifier for the collective, built greedily: each
// positive-mass feature point whose flip lowers `success` costs half the joint
// margin between the winning label and the best competitor; flips are bought
// in ascending cost order while the budget lasts. eps = 0 gives the Bayes
// classifier.
AdversarialFit eps_adversarial_fit(const FiniteJointDistribution& p, double eps,
                                   const SuccessEvent& success,
                                   const FallbackRule& fallback = global_modal_label);

ClassifierModel eps_adversarial_classifier(const FiniteJointDistribution& p, double eps,
                                           const SuccessEvent& success);

// The firm: Bayes for eps = 0, otherwise the adversarial epsilon-optimal rule.
struct Firm {
  double eps = 0.0;
  FallbackRule fallback = global_modal_label;

  ClassifierModel fit(const FiniteJointDistribution& p, const SuccessEvent& success) const;
};

// Feature transformation g over feature indices. With a target label it
// describes a planted signal; without one it is an erasure summary.
struct SignalMap {
  std::vector<std::size_t> image;
  std::optional<std::size_t> target_label;

  std::size_t operator()(std::size_t x) const { return image.at(x); }

  // Distinct feature indices in the image, ascending.
  std::vector<std::size_t> signal_set() const;
  void validate(const Universe& universe) const;
};

// (x, y) -> (g(x), y*).
Strategy feature_label_strategy(UniversePtr universe, const SignalMap& g);

// (x, y*) -> (g(x), y*); every other point stays put.
Strategy feature_only_strategy(UniversePtr universe, const SignalMap& g);

struct ErasureStrategy {
  Strategy strategy;
  // Feature indices whose summary g(x) had zero base mass; those fall back to
  // argmax_y P0(y|x).
  std::vector<std::size_t> fallback_points;
  bool fallback_used() const { return !fallback_points.empty(); }
};

// (x, y) -> (x, argmax_y P0(y|g(x))).
ErasureStrategy erasure_strategy(const FiniteJointDistribution& p0, const SignalMap& g);

// Pr_{x~P0}{ f(g(x)) = y* }.
double plant_success(const FiniteJointDistribution& p0, const SignalMap& g,
                     const ClassifierModel& f);

// Pr_{x~P0}{ f(x) = f(g(x)) }.
double erase_success(const FiniteJointDistribution& p0, const SignalMap& g,
                     const ClassifierModel& f);

double success_plant_exact(const FiniteJointDistribution& p0, const SignalMap& g,
                           const Strategy& strategy, double alpha, const Firm& firm);

double success_erase_exact(const FiniteJointDistribution& p0, const SignalMap& g, double alpha,
                           const Firm& firm);

struct SignalStats {
  double uniqueness = 0.0;  // xi = P0(X*)
  double subopt_gap = 0.0;  // Delta = max over supported X* of Delta_x
  double positivity = 0.0;  // p = min over supported x of P0(y*|x)
  std::vector<double> per_point_gaps;  // Delta_x per feature index, 0 where P0(x) = 0
};

struct ErasureStats {
  double sensitivity = 0.0;  // tau = E_{x~P0} tau(x)
  std::vector<double> per_point;  // tau(x) per feature index, 0 where P0(x) = 0
};

SignalStats signal_stats(const FiniteJointDistribution& p0, const SignalMap& g);

// Throws UndefinedConditionalError when a supported x has P0(g(x)) = 0.
ErasureStats erasure_stats(const FiniteJointDistribution& p0, const SignalMap& g);

// Lower bounds on S(alpha). alpha = 0 (and p = 0 for the feature-only bound)
// yield -infinity. Results may be negative; they are capped at 1.
double bound_feature_label(double alpha, double xi, double delta, double eps);
double bound_feature_only(double alpha, double xi, double p, double eps);
double bound_erasure(double alpha, double tau, double eps);

enum class PlantMode { feature_label, feature_only, erasure };

const char* to_string(PlantMode mode);
PlantMode plant_mode_from_string(const std::string& name);

struct BoundInputs {
  double xi = 0.0;
  double delta = 0.0;
  double positivity = 0.0;
  double tau = 0.0;
};

double bound_for(PlantMode mode, double alpha, const BoundInputs& in, double eps);

// Smallest alpha at which the matching bound reaches s_star; nullopt when the
// bound cannot reach it for any alpha in [0, 1].
std::optional<double> critical_mass_formula(PlantMode mode, double s_star, const BoundInputs& in,
                                            double eps);

struct TruncatedPositivity {
  double positivity = 0.0;  // p_R
  double retained_mass = 0.0;  // P0(R)
};

// Positivity restricted to region R (feature indices). Throws EmptyRegionError
// when R carries no base mass.
TruncatedPositivity truncated_positivity(const FiniteJointDistribution& p0,
                                         const std::vector<std::size_t>& region,
                                         std::size_t target_label);

// First-crossing critical mass of a tabulated curve: the first grid alpha with
// success >= s_star, linearly interpolated against the previous grid point.
std::optional<double> empirical_critical_mass(const SuccessCurve& curve, double s_star);

struct McEstimate {
  double success = 0.0;
  double std_error = 0.0;
};

// Finite-sample protocol: n_train draws from P0, a uniformly random
// floor(alpha * n_train)-subset pushed through `strategy`, the firm fitted on
// the empirical pmf, success measured on n_test fresh base draws.
McEstimate success_plant_mc(const FiniteJointDistribution& p0, const SignalMap& g,
                            const Strategy& strategy, double alpha, const Firm& firm,
                            std::size_t n_train, std::size_t n_test, Rng& rng);

McEstimate success_erase_mc(const FiniteJointDistribution& p0, const SignalMap& g, double alpha,
                            const Firm& firm, std::size_t n_train, std::size_t n_test, Rng& rng);

}  // namespace collact
