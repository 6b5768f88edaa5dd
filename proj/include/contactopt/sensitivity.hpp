#pragma once

// Direct design sensitivities of the contact solution from the differentiated
// KKT system, and chain-rule total derivatives of response functions.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "contactopt/forward.hpp"

namespace contactopt::sensitivity {

using linalg::Matrix;
using linalg::Vector;

/// Partial derivatives of the assembled model with respect to the design, at
/// fixed (u, lambda). All matrices have one column per design variable.
struct DesignDerivatives {
  Matrix dK_u;        // n x p, (dK/d rho_i) u
  Matrix df;          // n x p, d f_ext / d rho_i
  Matrix dg0;         // m x p
  Matrix dG_u;        // m x p, (dG/d rho_i) u
  Matrix dGt_lambda;  // n x p, (dG/d rho_i)^T lambda

  /// d g / d rho at fixed u.
  Matrix dgap() const { return dg0 + dG_u; }
};

/// Assembled model at one design: a shared K, G, g0 and one load vector per
/// load case (snapshot).
struct AssembledModel {
  Matrix K;
  std::vector<Vector> f;
  Matrix G;
  Vector g0;
};

using ModelBuilder = std::function<AssembledModel(const Eigen::VectorXd&)>;

/// Central differences of the assembled model, one DesignDerivatives per load
/// case, step rel_step * (1 + |rho_i|). u and lambda are per load case.
std::vector<DesignDerivatives> design_derivatives(const ModelBuilder& builder,
                                                  const Eigen::VectorXd& rho,
                                                  const std::vector<Vector>& u,
                                                  const std::vector<Vector>& lambda,
                                                  double rel_step = 1e-6);

struct Sensitivities {
  Matrix du_drho;       // n x p
  Matrix dlambda_drho;  // m x p
  std::vector<int> active_set;
};

struct SensitivityOptions {
  double eps_rel = 1e-7;  // activity / degeneracy threshold relative to the solution scale
  double rank_tol = 1e-12;
};

/// Solves [K -G_A^T; G_A 0][du; dl_A] = [-(dK u - df) + dG^T lambda; -(dg)_A]
/// per design column. Raises DegeneracyError when some used row has both
/// lambda_i <= eps_a and g_i <= eps_g, RankError when G_A is rank deficient.
Sensitivities solve_sensitivity(const forward::ForwardProblem& p,
                                const forward::ForwardSolution& sol,
                                const DesignDerivatives& derivs,
                                const SensitivityOptions& opts = {});

/// Partials of k response functions. d_u and d_lambda hold one block per load
/// case, matching the order of the sensitivities passed alongside.
struct FunctionPartials {
  Matrix d_rho;                   // k x p
  std::vector<Matrix> d_u;        // k x n each
  std::vector<Matrix> d_lambda;   // k x m each
};

/// d_rho + sum_s (d_u[s] du_s/drho + d_lambda[s] dlambda_s/drho), k x p.
Matrix total_derivatives(const FunctionPartials& parts, const std::vector<Sensitivities>& sens);

}  // namespace contactopt::sensitivity
