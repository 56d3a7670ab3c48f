#include "collact/probkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "collact/error.hpp"

namespace collact {

Universe::Universe(std::vector<std::int64_t> feature_codes, std::size_t label_count)
    : codes_(std::move(feature_codes)), labels_(label_count) {
  if (codes_.empty()) {
    throw StructuralError("universe needs at least one feature point");
  }
  if (labels_ < 2) {
    throw StructuralError("universe needs at least two labels");
  }
  index_.reserve(codes_.size());
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (!index_.emplace(codes_[i], i).second) {
      throw StructuralError("duplicate feature code " + std::to_string(codes_[i]));
    }
  }
}

Universe Universe::dense(std::size_t feature_count, std::size_t label_count) {
  std::vector<std::int64_t> codes(feature_count);
  std::iota(codes.begin(), codes.end(), std::int64_t{0});
  return Universe(std::move(codes), label_count);
}

std::optional<std::size_t> Universe::feature_index(std::int64_t code) const {
  const auto it = index_.find(code);
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

namespace {

void normalize_in_place(std::vector<double>& mass) {
  double total = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw StructuralError("probability mass must be finite and non-negative");
    }
    total += m;
  }
  if (!(total > 0.0)) {
    throw StructuralError("probability table has zero total mass");
  }
  for (double& m : mass) {
    m /= total;
  }
}

}  // namespace

FiniteJointDistribution::FiniteJointDistribution(UniversePtr universe, std::vector<double> mass)
    : universe_(std::move(universe)), mass_(std::move(mass)) {
  if (!universe_) {
    throw StructuralError("distribution without universe");
  }
  if (mass_.size() != universe_->size()) {
    throw StructuralError("mass table size " + std::to_string(mass_.size()) +
                          " does not match universe size " + std::to_string(universe_->size()));
  }
  const double total = std::accumulate(mass_.begin(), mass_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6) {
    throw StructuralError("mass table sums to " + std::to_string(total) + ", expected 1");
  }
  normalize_in_place(mass_);
}

FiniteJointDistribution FiniteJointDistribution::from_weights(UniversePtr universe,
                                                              std::vector<double> weights) {
  normalize_in_place(weights);
  return FiniteJointDistribution(std::move(universe), std::move(weights));
}

FiniteJointDistribution FiniteJointDistribution::point_mass(UniversePtr universe, std::size_t x,
                                                            std::size_t y) {
  if (x >= universe->feature_count() || y >= universe->label_count()) {
    throw StructuralError("point mass outside the universe");
  }
  std::vector<double> mass(universe->size(), 0.0);
  mass[universe->point(x, y)] = 1.0;
  return FiniteJointDistribution(std::move(universe), std::move(mass));
}

double FiniteJointDistribution::marginal(std::size_t x) const {
  const std::size_t k = universe_->label_count();
  const auto row = std::span<const double>(mass_).subspan(x * k, k);
  return std::accumulate(row.begin(), row.end(), 0.0);
}

std::vector<double> FiniteJointDistribution::feature_marginals() const {
  std::vector<double> out(universe_->feature_count());
  for (std::size_t x = 0; x < out.size(); ++x) {
    out[x] = marginal(x);
  }
  return out;
}

std::vector<double> FiniteJointDistribution::label_marginals() const {
  std::vector<double> out(universe_->label_count(), 0.0);
  for (std::size_t z = 0; z < mass_.size(); ++z) {
    out[universe_->label_of(z)] += mass_[z];
  }
  return out;
}

bool FiniteJointDistribution::same_universe(const FiniteJointDistribution& other) const {
  return universe_ == other.universe_ || *universe_ == *other.universe_;
}

Strategy::Strategy(UniversePtr universe, std::vector<Row> rows)
    : universe_(std::move(universe)), rows_(std::move(rows)) {
  if (rows_.size() != universe_->size()) {
    throw StructuralError("strategy kernel needs one row per universe point");
  }
  for (auto& row : rows_) {
    if (row.empty()) {
      continue;
    }
    double total = 0.0;
    for (const auto& [dest, prob] : row) {
      if (dest >= universe_->size()) {
        throw StructuralError("strategy destination outside the universe");
      }
      if (!(prob >= 0.0) || !std::isfinite(prob)) {
        throw StructuralError("strategy row has invalid probability");
      }
      total += prob;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw StructuralError("strategy row is not a pmf");
    }
    for (auto& entry : row) {
      entry.second /= total;
    }
  }
}

Strategy Strategy::identity(UniversePtr universe) {
  std::vector<Row> rows(universe->size());
  for (std::size_t z = 0; z < rows.size(); ++z) {
    rows[z] = {{z, 1.0}};
  }
  return Strategy(std::move(universe), std::move(rows));
}

std::size_t Strategy::apply(std::size_t z, Rng& rng) const {
  const Row& r = row(z);
  if (r.empty()) {
    throw StrategyIncompleteError("strategy undefined at point " + std::to_string(z));
  }
  if (r.size() == 1) {
    return r.front().first;
  }
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (const auto& [dest, prob] : r) {
    cumulative += prob;
    if (u < cumulative) {
      return dest;
    }
  }
  return r.back().first;
}

FiniteJointDistribution mixture(const FiniteJointDistribution& p0,
                                const FiniteJointDistribution& pstar, double alpha) {
  if (!p0.same_universe(pstar)) {
    throw StructuralError("mixture of distributions over different universes");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw StructuralError("mixture weight outside [0, 1]");
  }
  if (alpha == 0.0) {
    return p0;
  }
  if (alpha == 1.0) {
    return pstar;
  }
  const auto a = p0.masses();
  const auto b = pstar.masses();
  std::vector<double> mass(a.size());
  for (std::size_t z = 0; z < mass.size(); ++z) {
    mass[z] = alpha * b[z] + (1.0 - alpha) * a[z];
  }
  return FiniteJointDistribution::from_weights(p0.universe_ptr(), std::move(mass));
}

FiniteJointDistribution pushforward(const FiniteJointDistribution& p0, const Strategy& h) {
  if (!(p0.universe() == h.universe())) {
    throw StructuralError("strategy and distribution live on different universes");
  }
  const auto src = p0.masses();
  std::vector<double> mass(src.size(), 0.0);
  for (std::size_t z = 0; z < src.size(); ++z) {
    if (src[z] == 0.0) {
      continue;
    }
    const auto& row = h.row(z);
    if (row.empty()) {
      throw StrategyIncompleteError("strategy undefined at supported point " + std::to_string(z));
    }
    for (const auto& [dest, prob] : row) {
      mass[dest] += src[z] * prob;
    }
  }
  return FiniteJointDistribution::from_weights(p0.universe_ptr(), std::move(mass));
}

std::vector<double> conditional(const FiniteJointDistribution& p, std::size_t x) {
  const double px = p.marginal(x);
  if (!(px > 0.0)) {
    throw UndefinedConditionalError("P(x) = 0 at feature code " +
                                    std::to_string(p.universe().feature_code(x)));
  }
  const std::size_t k = p.universe().label_count();
  std::vector<double> out(k);
  for (std::size_t y = 0; y < k; ++y) {
    out[y] = p.mass(x, y) / px;
  }
  return out;
}

double tv_distance(const FiniteJointDistribution& p, const FiniteJointDistribution& q) {
  if (!p.same_universe(q)) {
    throw StructuralError("total variation between different universes");
  }
  const auto a = p.masses();
  const auto b = q.masses();
  double sum = 0.0;
  for (std::size_t z = 0; z < a.size(); ++z) {
    sum += std::abs(a[z] - b[z]);
  }
  return std::min(1.0, 0.5 * sum);
}

std::vector<LabeledPoint> sample(const FiniteJointDistribution& p, Rng& rng, std::size_t n) {
  std::vector<LabeledPoint> out;
  if (n == 0) {
    return out;
  }
  const auto mass = p.masses();
  std::vector<double> cdf(mass.size());
  std::partial_sum(mass.begin(), mass.end(), cdf.begin());
  // Last supported point absorbs rounding so u close to 1 never falls off.
  std::size_t last = 0;
  for (std::size_t z = 0; z < mass.size(); ++z) {
    if (mass[z] > 0.0) {
      last = z;
    }
  }
  out.reserve(n);
  const Universe& u = p.universe();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    std::size_t z = static_cast<std::size_t>(it - cdf.begin());
    if (z > last) {
      z = last;
    }
    out.push_back({u.feature_of(z), u.label_of(z)});
  }
  return out;
}

FiniteJointDistribution empirical(UniversePtr universe, std::span<const LabeledPoint> points) {
  if (points.empty()) {
    throw StructuralError("empirical distribution of an empty sample");
  }
  std::vector<double> counts(universe->size(), 0.0);
  for (const auto& pt : points) {
    counts.at(universe->point(pt.x, pt.y)) += 1.0;
  }
  return FiniteJointDistribution::from_weights(std::move(universe), std::move(counts));
}

std::size_t argmax_first(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) {
      best = i;
    }
  }
  return best;
}

}  // namespace collact
