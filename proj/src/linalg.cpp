#include "contactopt/linalg.hpp"

#include <cmath>
#include <string>

namespace contactopt::linalg {

long first_bad_pivot(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return static_cast<long>(j);
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return -1;
}

Cholesky::Cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("cholesky: matrix is not square");
  llt_.compute(a);
  if (llt_.info() != Eigen::Success) {
    long pivot = first_bad_pivot(a);
    // Eigen's blocked sweep can fail on a pivot the scalar sweep still accepts
    // by a rounding margin; report the last column in that case.
    if (pivot < 0) pivot = static_cast<long>(a.rows()) - 1;
    throw FactorizationError("cholesky: non-positive pivot at column " + std::to_string(pivot),
                             pivot);
  }
}

Vector Cholesky::solve(const Vector& b) const {
  if (b.size() != order()) throw DimensionError("cholesky solve: size mismatch");
  return llt_.solve(b);
}

Matrix Cholesky::solve(const Matrix& b) const {
  if (b.rows() != order()) throw DimensionError("cholesky solve: size mismatch");
  return llt_.solve(b);
}

Matrix Cholesky::solve_lower(const Matrix& b) const {
  if (b.rows() != order()) throw DimensionError("cholesky solve: size mismatch");
  return llt_.matrixL().solve(b);
}

double Cholesky::log_determinant() const {
  const auto& lm = llt_.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < lm.rows(); ++i) s += std::log(lm(i, i));
  return 2.0 * s;
}

namespace {

Cholesky factor_schur(const Matrix& s, double rank_tol) {
  const double scale = s.diagonal().cwiseAbs().maxCoeff();
  Cholesky c;
  try {
    c = Cholesky(s);
  } catch (const FactorizationError& e) {
    throw RankError("saddle_solve: constraint block is rank deficient (pivot " +
                    std::to_string(e.pivot()) + ")");
  }
  const Matrix l = c.lower();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (l(i, i) * l(i, i) <= rank_tol * scale) {
      throw RankError("saddle_solve: constraint block is rank deficient (pivot " +
                      std::to_string(i) + ")");
    }
  }
  return c;
}

}  // namespace

SaddleBlockSolution saddle_solve(const Cholesky& k_factor, const Matrix& g, const Matrix& r1,
                                 const Matrix& r2, double rank_tol) {
  const Eigen::Index n = k_factor.order();
  if (g.cols() != n || r1.rows() != n || r2.rows() != g.rows() || r1.cols() != r2.cols()) {
    throw DimensionError("saddle_solve: dimension mismatch");
  }
  SaddleBlockSolution out;
  const Matrix kinv_r1 = k_factor.solve(r1);
  if (g.rows() == 0) {
    out.du = kinv_r1;
    out.dlambda = Matrix::Zero(0, r1.cols());
    return out;
  }
  const Matrix kinv_gt = k_factor.solve(Matrix(g.transpose()));
  Matrix s = g * kinv_gt;
  s = 0.5 * (s + s.transpose()).eval();
  const Cholesky s_factor = factor_schur(s, rank_tol);
  // K du = r1 + G^T dl  and  G du = r2  =>  S dl = r2 - G K^{-1} r1
  out.dlambda = s_factor.solve(Matrix(r2 - g * kinv_r1));
  out.du = kinv_r1 + kinv_gt * out.dlambda;
  return out;
}

SaddleSolution saddle_solve(const Cholesky& k_factor, const Matrix& g, const Vector& r1,
                            const Vector& r2, double rank_tol) {
  auto block = saddle_solve(k_factor, g, Matrix(r1), Matrix(r2), rank_tol);
  return {block.du.col(0), block.dlambda.rows() ? Vector(block.dlambda.col(0)) : Vector()};
}

double relative_asymmetry(const Matrix& a) {
  const double m = a.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff() / m;
}

}  // namespace contactopt::linalg
