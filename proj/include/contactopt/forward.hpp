#pragma once

// Contact QP  min 1/2 u^T K u - f^T u  s.t.  g0 + G u >= 0, solved by a
// Mehrotra primal-dual interior-point method on the condensed multiplier
// problem, followed by an active-set polish.

#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "contactopt/elasticity.hpp"
#include "contactopt/linalg.hpp"
#include "contactopt/mortar.hpp"

namespace contactopt::forward {

using linalg::Matrix;
using linalg::Vector;

struct ForwardProblem {
  Matrix K;
  Vector f_ext;
  Matrix G;
  Vector g0;
  /// Rows whose mask entry is false are dropped (multiplier fixed at 0).
  /// Empty means every row takes part.
  std::vector<bool> row_mask;
  /// Optional Cholesky factor of K, reused when present.
  std::shared_ptr<const linalg::Cholesky> k_factor;

  int n() const { return static_cast<int>(K.rows()); }
  int m() const { return static_cast<int>(g0.size()); }
  bool row_used(int i) const { return row_mask.empty() || row_mask[i]; }
};

/// Problem from assembled matrices and mortar rows; zero-weight rows are masked.
ForwardProblem make_problem(const elasticity::SystemMatrices& sys, const mortar::MortarData& md);

struct ForwardOptions {
  double tol = 1e-9;
  int max_iter = 200;
  double fraction_to_boundary = 0.995;
  bool polish = true;
  double clip = 1e-10;  // relative threshold below which lambda and g are reported as 0
  /// Optional per-iteration log: iter mu primal_residual complementarity.
  std::ostream* log = nullptr;
  /// Optional starting multipliers (scaled internally); empty = default start.
  Vector lambda_start;
};

/// Residuals of the contact KKT conditions. Raw values are absolute; each
/// scaled value divides by the matching scale below.
struct KktResiduals {
  double stationarity = 0;     // ||K u - f - G^T lambda||_inf
  double primal = 0;           // max(0, -min g)
  double dual = 0;             // max(0, -min lambda)
  double complementarity = 0;  // max |lambda_i g_i|
  double force_scale = 1;      // 1 + ||f||_inf + ||G^T lambda||_inf
  double gap_scale = 1;        // max(||g0||_inf, || |G| |u| ||_inf), floored
  double lambda_scale = 1;     // ||lambda||_inf, floored

  double stationarity_scaled() const { return stationarity / force_scale; }
  double primal_scaled() const { return primal / gap_scale; }
  double dual_scaled() const { return dual / lambda_scale; }
  double complementarity_scaled() const { return complementarity / (gap_scale * lambda_scale); }
  double max_scaled() const;
};

struct ForwardSolution {
  Vector u;
  Vector lambda;
  Vector gap;
  KktResiduals kkt;
  int iterations = 0;
  bool polished = false;
};

ForwardSolution solve_forward(const ForwardProblem& p, const ForwardOptions& opts = {});

KktResiduals kkt_residuals(const ForwardProblem& p, const Vector& u, const Vector& lambda);

}  // namespace contactopt::forward
