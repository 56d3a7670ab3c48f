#pragma once

#include <stdexcept>
#include <string>

namespace collact {

// Base for every failure raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses exist so tests and the CLI
// can tell the documented error paths apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched universes, malformed tables, out-of-range indices.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A strategy kernel has no row for a point that carries mass.
class StrategyIncompleteError : public Error {
 public:
  using Error::Error;
};

// P(y|x) requested at a feature point with P(x) = 0.
class UndefinedConditionalError : public Error {
 public:
  using Error::Error;
};

// A planting strategy was built from a signal map without a target label.
class MissingTargetError : public Error {
 public:
  using Error::Error;
};

class EmptyRegionError : public Error {
 public:
  using Error::Error;
};

// Risk minimization without a unique minimizer (lambda = 0, singular design).
class NonUniqueMinimizerError : public Error {
 public:
  using Error::Error;
};

// Feature-only neutralization impossible because no label sits below the mean
// prediction at the neutralizing feature.
class NoNeutralizerError : public Error {
 public:
  using Error::Error;
};

class InfeasiblePolicyError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModeError : public Error {
 public:
  using Error::Error;
};

// Participation model with free-ride share gamma >= 1.
class DegenerateModelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace collact
