#include "contactopt/sensitivity.hpp"

#include <algorithm>
#include <limits>

#include "contactopt/geometry.hpp"

namespace contactopt::sensitivity {

std::vector<DesignDerivatives> design_derivatives(const ModelBuilder& builder,
                                                  const Eigen::VectorXd& rho,
                                                  const std::vector<Vector>& u,
                                                  const std::vector<Vector>& lambda,
                                                  double rel_step) {
  if (u.size() != lambda.size()) throw DimensionError("design_derivatives: u/lambda case count differs");
  const std::size_t cases = u.size();
  const Eigen::Index p = rho.size();
  std::vector<DesignDerivatives> out(cases);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double h = geometry::fd_step(rho(i), rel_step);
    Eigen::VectorXd rp = rho, rm = rho;
    rp(i) += h;
    rm(i) -= h;
    const AssembledModel plus = builder(rp);
    const AssembledModel minus = builder(rm);
    if (plus.K.rows() != minus.K.rows() || plus.G.rows() != minus.G.rows() ||
        plus.G.cols() != minus.G.cols() || plus.f.size() != cases || minus.f.size() != cases) {
      throw TopologyError("design_derivatives: model size changed under perturbation");
    }
    const Eigen::Index n = plus.K.rows(), m = plus.G.rows();
    for (std::size_t s = 0; s < cases; ++s) {
      if (u[s].size() != n || lambda[s].size() != m) {
        throw DimensionError("design_derivatives: u or lambda does not match the model");
      }
      auto& d = out[s];
      if (i == 0) {
        d.dK_u.resize(n, p);
        d.df.resize(n, p);
        d.dg0.resize(m, p);
        d.dG_u.resize(m, p);
        d.dGt_lambda.resize(n, p);
      }
      d.dK_u.col(i) = (plus.K * u[s] - minus.K * u[s]) / (2 * h);
      d.df.col(i) = (plus.f[s] - minus.f[s]) / (2 * h);
      d.dg0.col(i) = (plus.g0 - minus.g0) / (2 * h);
      d.dG_u.col(i) = (plus.G * u[s] - minus.G * u[s]) / (2 * h);
      d.dGt_lambda.col(i) =
          (plus.G.transpose() * lambda[s] - minus.G.transpose() * lambda[s]) / (2 * h);
    }
  }
  return out;
}

Sensitivities solve_sensitivity(const forward::ForwardProblem& p,
                                const forward::ForwardSolution& sol,
                                const DesignDerivatives& derivs, const SensitivityOptions& opts) {
  const Eigen::Index n = p.n(), m = p.m();
  const Eigen::Index cols = derivs.dK_u.cols();
  if (sol.u.size() != n || sol.lambda.size() != m || derivs.dK_u.rows() != n ||
      derivs.df.rows() != n || derivs.dGt_lambda.rows() != n || derivs.dg0.rows() != m ||
      derivs.dG_u.rows() != m || derivs.df.cols() != cols || derivs.dg0.cols() != cols ||
      derivs.dG_u.cols() != cols || derivs.dGt_lambda.cols() != cols) {
    throw DimensionError("solve_sensitivity: dimension mismatch");
  }
  const Vector g = p.g0 + p.G * sol.u;
  const double eps_a = opts.eps_rel * sol.kkt.lambda_scale;
  const double eps_g = opts.eps_rel * sol.kkt.gap_scale;

  Sensitivities out;
  std::vector<int> degenerate;
  for (int i = 0; i < m; ++i) {
    if (!p.row_used(i)) continue;
    if (sol.lambda(i) > eps_a) {
      out.active_set.push_back(i);
    } else if (g(i) <= eps_g) {
      degenerate.push_back(i);
    }
  }
  if (!degenerate.empty()) {
    std::string list;
    for (int i : degenerate) list += (list.empty() ? "" : ",") + std::to_string(i);
    throw DegeneracyError("solve_sensitivity: weak complementarity at rows " + list, degenerate);
  }

  std::shared_ptr<const linalg::Cholesky> factor = p.k_factor;
  if (!factor) factor = std::make_shared<linalg::Cholesky>(p.K);

  std::vector<Eigen::Index> A(out.active_set.begin(), out.active_set.end());
  const Matrix ga = p.G(A, Eigen::all);
  const Matrix r1 = -(derivs.dK_u - derivs.df) + derivs.dGt_lambda;
  const Matrix r2 = -derivs.dgap()(A, Eigen::all);
  const auto block = linalg::saddle_solve(*factor, ga, r1, r2, opts.rank_tol);
  out.du_drho = block.du;
  out.dlambda_drho = Matrix::Zero(m, cols);
  out.dlambda_drho(A, Eigen::all) = block.dlambda;
  return out;
}

Matrix total_derivatives(const FunctionPartials& parts, const std::vector<Sensitivities>& sens) {
  if (parts.d_u.size() != sens.size() || parts.d_lambda.size() != sens.size()) {
    throw DimensionError("total_derivatives: load case count mismatch");
  }
  Matrix out = parts.d_rho;
  for (std::size_t s = 0; s < sens.size(); ++s) {
    const auto& du = parts.d_u[s];
    const auto& dl = parts.d_lambda[s];
    if (du.rows() != out.rows() || dl.rows() != out.rows() || du.cols() != sens[s].du_drho.rows() ||
        dl.cols() != sens[s].dlambda_drho.rows() || sens[s].du_drho.cols() != out.cols() ||
        sens[s].dlambda_drho.cols() != out.cols()) {
      throw DimensionError("total_derivatives: dimension mismatch");
    }
    out += du * sens[s].du_drho + dl * sens[s].dlambda_drho;
  }
  return out;
}

}  // namespace contactopt::sensitivity
