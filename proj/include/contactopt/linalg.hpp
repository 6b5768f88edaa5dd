#pragma once

// Small dense linear-algebra kernel: Cholesky factor/solve and the
// Schur-complement solve of symmetric saddle-point systems.

#include <Eigen/Dense>

#include "contactopt/errors.hpp"

namespace contactopt::linalg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Cholesky factor A = L L^T of a symmetric positive definite matrix.
///
/// Only the lower triangle of the input is read. A non-positive pivot raises
/// FactorizationError carrying the zero-based index of the failing column.
class Cholesky {
 public:
  Cholesky() = default;
  explicit Cholesky(const Matrix& a);

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;

  /// Forward substitution L^{-1} B.
  Matrix solve_lower(const Matrix& b) const;

  double log_determinant() const;
  Eigen::Index order() const { return llt_.rows(); }
  Matrix lower() const { return llt_.matrixL(); }

 private:
  Eigen::LLT<Matrix> llt_;
};

/// Zero-based index of the first non-positive pivot of an unblocked Cholesky
/// sweep over the lower triangle of `a`, or -1 when every pivot is positive.
long first_bad_pivot(const Matrix& a);

struct SaddleSolution {
  Vector du;
  Vector dlambda;
};

/// Solves [K  -G^T; G  0] [du; dl] = [r1; r2] through the Schur complement
/// S = G K^{-1} G^T. `k_factor` is a Cholesky factor of K.
///
/// Throws RankError when S is singular relative to `rank_tol`.
SaddleSolution saddle_solve(const Cholesky& k_factor, const Matrix& g, const Vector& r1,
                            const Vector& r2, double rank_tol = 1e-12);

/// Column-batched version: R1 is n x k, R2 is m x k.
struct SaddleBlockSolution {
  Matrix du;
  Matrix dlambda;
};
SaddleBlockSolution saddle_solve(const Cholesky& k_factor, const Matrix& g, const Matrix& r1,
                                 const Matrix& r2, double rank_tol = 1e-12);

/// Largest absolute asymmetry max|A - A^T| relative to max|A|.
double relative_asymmetry(const Matrix& a);

}  // namespace contactopt::linalg
