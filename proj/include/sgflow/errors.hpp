#pragma once

#include <stdexcept>
#include <string>

namespace sgflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

/// Newton iteration exhausted max_iter without meeting the tolerance.
struct NonConvergenceError : Error {
  NonConvergenceError(const std::string& what, double residual)
      : Error(what), last_residual(residual) {}
  double last_residual;
};

struct SingularJacobianError : Error {
  using Error::Error;
};

/// The controller QP has no feasible point at the queried (x, u).
struct QpInfeasibleError : Error {
  QpInfeasibleError(const std::string& what, char row, double violation)
      : Error(what), most_violated_row(row), violation(violation) {}
  char most_violated_row;  // 'b' or 'h'
  double violation;
};

/// Near-parallel constraint normals in the both-active case.
struct DegenerateGeometryError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct UnknownProblemError : Error {
  using Error::Error;
};

}  // namespace sgflow
