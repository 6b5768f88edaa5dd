#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace contactopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside its admissible range (angles, Bezier parameter, bounds).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Generated mesh has a tangled element, crossing surfaces or a degenerate segment.
class MeshQualityError : public Error {
 public:
  using Error::Error;
};

/// Mesh topology changed between two designs that must share it.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Cholesky met a non-positive pivot. `pivot()` is the zero-based column index.
class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, long pivot) : Error(what), pivot_(pivot) {}
  long pivot() const { return pivot_; }

 private:
  long pivot_;
};

/// Stiffness singular on the free dofs (missing boundary conditions).
class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// Constraint block without full row rank (LICQ failure).
class RankError : public Error {
 public:
  using Error::Error;
};

/// Weak complementarity: indices with both multiplier and gap at zero.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::vector<int> indices)
      : Error(what), indices_(std::move(indices)) {}
  const std::vector<int>& indices() const { return indices_; }

 private:
  std::vector<int> indices_;
};

/// Iterative solver hit its iteration cap.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Malformed configuration or command line.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace contactopt
