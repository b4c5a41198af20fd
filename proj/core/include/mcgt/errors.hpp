#pragma once

#include <stdexcept>
#include <string>

namespace mcgt {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mis-sized vectors, invalid cluster/agent indices, mismatched inputs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Graph / weight-matrix problems (disconnected graph, bad stochasticity).
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter values or failed assumption checks at construction.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Dykstra did not converge within the sweep budget.
class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, double last_change, double last_violation)
      : Error(what), last_change(last_change), last_violation(last_violation) {}
  double last_change;
  double last_violation;
};

/// Constraint set certified empty, or a scenario admits no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Config file problems; message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcgt
