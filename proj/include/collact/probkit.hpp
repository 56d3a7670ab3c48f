#pragma once

// Exact probability over a finite feature-label universe Z = X x Y.
//
// Points are addressed by index: feature index i in [0, |X|), label index
// j in [0, |Y|), flat point index z = i * |Y| + j. Feature points also carry
// an integer code (x_code) used by file formats; richer semantics such as
// categorical tuples live in the scenario layer.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "collact/rng.hpp"

namespace collact {

inline constexpr double kMassTolerance = 1e-12;

class Universe {
 public:
  Universe(std::vector<std::int64_t> feature_codes, std::size_t label_count);

  // Features coded 0..feature_count-1.
  static Universe dense(std::size_t feature_count, std::size_t label_count);

  std::size_t feature_count() const { return codes_.size(); }
  std::size_t label_count() const { return labels_; }
  std::size_t size() const { return codes_.size() * labels_; }

  std::int64_t feature_code(std::size_t x) const { return codes_.at(x); }
  const std::vector<std::int64_t>& feature_codes() const { return codes_; }
  std::optional<std::size_t> feature_index(std::int64_t code) const;

  std::size_t point(std::size_t x, std::size_t y) const { return x * labels_ + y; }
  std::size_t feature_of(std::size_t z) const { return z / labels_; }
  std::size_t label_of(std::size_t z) const { return z % labels_; }

  bool operator==(const Universe& other) const {
    return labels_ == other.labels_ && codes_ == other.codes_;
  }

 private:
  std::vector<std::int64_t> codes_;
  std::size_t labels_;
  std::unordered_map<std::int64_t, std::size_t> index_;
};

using UniversePtr = std::shared_ptr<const Universe>;

struct LabeledPoint {
  std::size_t x;
  std::size_t y;
  bool operator==(const LabeledPoint&) const = default;
};

// Probability mass function over a universe. Immutable; every constructor
// validates non-negativity and renormalizes so the total is 1.
class FiniteJointDistribution {
 public:
  // `mass` must be indexed by flat point index and sum to 1 within 1e-6.
  FiniteJointDistribution(UniversePtr universe, std::vector<double> mass);

  // Arbitrary non-negative weights with positive total.
  static FiniteJointDistribution from_weights(UniversePtr universe, std::vector<double> weights);
  static FiniteJointDistribution point_mass(UniversePtr universe, std::size_t x, std::size_t y);

  const Universe& universe() const { return *universe_; }
  const UniversePtr& universe_ptr() const { return universe_; }
  std::span<const double> masses() const { return mass_; }

  double mass(std::size_t x, std::size_t y) const { return mass_[universe_->point(x, y)]; }
  double mass_at(std::size_t z) const { return mass_[z]; }

  // P(x) = sum_y P(x, y).
  double marginal(std::size_t x) const;
  std::vector<double> feature_marginals() const;
  std::vector<double> label_marginals() const;

  bool same_universe(const FiniteJointDistribution& other) const;

 private:
  UniversePtr universe_;
  std::vector<double> mass_;
};

// Stochastic kernel h: Z -> Z. Row z lists (destination, probability) pairs;
// an empty row means "undefined at z".
class Strategy {
 public:
  using Row = std::vector<std::pair<std::size_t, double>>;

  Strategy(UniversePtr universe, std::vector<Row> rows);

  static Strategy identity(UniversePtr universe);

  const Universe& universe() const { return *universe_; }
  const UniversePtr& universe_ptr() const { return universe_; }
  const Row& row(std::size_t z) const { return rows_.at(z); }
  bool defined_at(std::size_t z) const { return !rows_.at(z).empty(); }

  // Draws a destination for source z.
  std::size_t apply(std::size_t z, Rng& rng) const;

 private:
  UniversePtr universe_;
  std::vector<Row> rows_;
};

// alpha * pstar + (1 - alpha) * p0. alpha = 0 and alpha = 1 return the inputs
// exactly.
FiniteJointDistribution mixture(const FiniteJointDistribution& p0,
                                const FiniteJointDistribution& pstar, double alpha);

// Law of h(z) for z ~ p0.
FiniteJointDistribution pushforward(const FiniteJointDistribution& p0, const Strategy& h);

// P(. | x). Throws UndefinedConditionalError when P(x) = 0.
std::vector<double> conditional(const FiniteJointDistribution& p, std::size_t x);

double tv_distance(const FiniteJointDistribution& p, const FiniteJointDistribution& q);

// Inverse-CDF draws over the universe ordering.
std::vector<LabeledPoint> sample(const FiniteJointDistribution& p, Rng& rng, std::size_t n);

// Empirical pmf of a sample (counts / n) over `universe`.
FiniteJointDistribution empirical(UniversePtr universe, std::span<const LabeledPoint> points);

// Index of the largest entry, ties to the smallest index.
std::size_t argmax_first(std::span<const double> values);

}  // namespace collact
