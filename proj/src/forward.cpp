#include "contactopt/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace contactopt::forward {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

double max_step(const Vector& x, const Vector& dx) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) alpha = std::min(alpha, -x(i) / dx(i));
  return alpha;
}

struct LcpResult {
  Vector lambda;
  Vector s;
  int iterations = 0;
  bool converged = false;
};

// Monotone LCP  s = W lambda + b,  lambda, s >= 0,  lambda.s = 0  with W and b
// already normalized to unit scale.
LcpResult interior_point(const Matrix& W, const Vector& b, const ForwardOptions& opts,
                         const Vector& lambda0) {
  const Eigen::Index m = b.size();
  LcpResult res;
  res.lambda = lambda0.size() == m ? lambda0.cwiseMax(1e-2).eval() : Vector::Ones(m);
  res.s = (W * res.lambda + b).cwiseMax(1.0);
  Vector& lam = res.lambda;
  Vector& s = res.s;
  const double target = opts.tol;

  for (int k = 0; k < opts.max_iter; ++k) {
    const Vector r = s - W * lam - b;
    const double mu = lam.dot(s) / static_cast<double>(m);
    const double compl_max = lam.cwiseProduct(s).maxCoeff();
    if (opts.log) {
      *opts.log << k << ' ' << mu << ' ' << r.cwiseAbs().maxCoeff() << ' ' << compl_max << '\n';
    }
    if (r.cwiseAbs().maxCoeff() <= target && compl_max <= target) {
      res.converged = true;
      res.iterations = k;
      return res;
    }
    Matrix M = W;
    M.diagonal() += s.cwiseQuotient(lam);
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) {
      M.diagonal().array() += 1e-14 * M.diagonal().cwiseAbs().maxCoeff();
      llt.compute(M);
      if (llt.info() != Eigen::Success) break;
    }
    auto direction = [&](const Vector& rhs_c, Vector& dl, Vector& ds) {
      dl = llt.solve(Vector(rhs_c.cwiseQuotient(lam) + r));
      ds = W * dl - r;
    };
    Vector dla, dsa;
    direction(-lam.cwiseProduct(s), dla, dsa);
    const double alpha_aff = std::min(max_step(lam, dla), max_step(s, dsa));
    const double mu_aff =
        (lam + alpha_aff * dla).dot(s + alpha_aff * dsa) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3);

    Vector rhs = -lam.cwiseProduct(s) - dla.cwiseProduct(dsa);
    rhs.array() += sigma * mu;
    Vector dl, ds;
    direction(rhs, dl, ds);
    const double alpha =
        std::min(1.0, opts.fraction_to_boundary * std::min(max_step(lam, dl), max_step(s, ds)));
    lam += alpha * dl;
    s += alpha * ds;
    res.iterations = k + 1;
  }
  return res;
}

// Solve W_AA lambda_A = -b_A for a guessed active set, moving every violated
// index across on each round. Returns false if no consistent active set was found.
bool polish(const Matrix& W, const Vector& b, std::vector<bool> active, Vector& lambda) {
  const Eigen::Index m = b.size();
  const double bscale = std::max(b.cwiseAbs().maxCoeff(), kTiny);
  for (int round = 0; round < 50; ++round) {
    std::vector<Eigen::Index> A;
    for (Eigen::Index i = 0; i < m; ++i)
      if (active[i]) A.push_back(i);
    Vector lam = Vector::Zero(m);
    if (!A.empty()) {
      const Matrix waa = W(A, A);
      Eigen::LLT<Matrix> llt(waa);
      if (llt.info() != Eigen::Success) return false;
      const Vector la = llt.solve(Vector(-b(A)));
      // Reject nearly singular active blocks.
      const Vector back = waa * la + b(A);
      if (back.cwiseAbs().maxCoeff() > 1e-10 * bscale) return false;
      lam(A) = la;
    }
    const Vector s = W * lam + b;
    const double lscale = std::max(lam.cwiseAbs().maxCoeff(), kTiny);
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (active[i] && lam(i) < -1e-12 * lscale) {
        active[i] = false;
        changed = true;
      } else if (!active[i] && s(i) < -1e-12 * bscale) {
        active[i] = true;
        changed = true;
      }
    }
    if (!changed) {
      lambda = lam;
      return true;
    }
  }
  return false;
}

}  // namespace

double KktResiduals::max_scaled() const {
  return std::max({stationarity_scaled(), primal_scaled(), dual_scaled(), complementarity_scaled()});
}

ForwardProblem make_problem(const elasticity::SystemMatrices& sys, const mortar::MortarData& md) {
  if (md.G.cols() != sys.K.rows()) throw DimensionError("make_problem: mortar columns do not match K");
  ForwardProblem p;
  p.K = sys.K;
  p.f_ext = sys.f_ext;
  p.G = md.G;
  p.g0 = md.g0;
  p.k_factor = sys.factor;
  const double wmax = md.rows() ? md.weights.maxCoeff() : 0.0;
  p.row_mask.resize(md.rows());
  for (int i = 0; i < md.rows(); ++i) p.row_mask[i] = md.weights(i) > 1e-12 * wmax;
  return p;
}

KktResiduals kkt_residuals(const ForwardProblem& p, const Vector& u, const Vector& lambda) {
  if (u.size() != p.n() || lambda.size() != p.m() || p.G.rows() != p.m() || p.G.cols() != p.n() ||
      p.f_ext.size() != p.n()) {
    throw DimensionError("kkt_residuals: dimension mismatch");
  }
  KktResiduals r;
  const Vector gtl = p.G.transpose() * lambda;
  const Vector gu = p.G * u;
  // Size of the terms summed in G u: when both sides move together G u
  // cancels, but its rounding error scales with these.
  const Vector gu_terms = p.G.cwiseAbs() * u.cwiseAbs();
  r.stationarity = (p.K * u - p.f_ext - gtl).cwiseAbs().maxCoeff();
  r.force_scale = 1.0 + p.f_ext.cwiseAbs().maxCoeff() + gtl.cwiseAbs().maxCoeff();
  double g0max = 0, gumax = 0, lmax = 0;
  for (int i = 0; i < p.m(); ++i) {
    if (!p.row_used(i)) continue;
    const double g = p.g0(i) + gu(i);
    r.primal = std::max(r.primal, -g);
    r.dual = std::max(r.dual, -lambda(i));
    r.complementarity = std::max(r.complementarity, std::abs(lambda(i) * g));
    g0max = std::max(g0max, std::abs(p.g0(i)));
    gumax = std::max(gumax, gu_terms(i));
    lmax = std::max(lmax, std::abs(lambda(i)));
  }
  r.gap_scale = std::max({g0max, gumax, kTiny});
  r.lambda_scale = std::max(lmax, kTiny);
  return r;
}

ForwardSolution solve_forward(const ForwardProblem& p, const ForwardOptions& opts) {
  if (p.K.cols() != p.n() || p.f_ext.size() != p.n() || p.G.rows() != p.m() ||
      (p.m() > 0 && p.G.cols() != p.n()) ||
      (!p.row_mask.empty() && static_cast<int>(p.row_mask.size()) != p.m())) {
    throw DimensionError("solve_forward: dimension mismatch");
  }
  std::shared_ptr<const linalg::Cholesky> factor = p.k_factor;
  if (!factor) factor = std::make_shared<linalg::Cholesky>(p.K);

  std::vector<Eigen::Index> used;
  for (int i = 0; i < p.m(); ++i)
    if (p.row_used(i)) used.push_back(i);

  ForwardSolution sol;
  const Vector u_free = factor->solve(p.f_ext);
  sol.lambda = Vector::Zero(p.m());
  sol.u = u_free;

  if (!used.empty()) {
    const Matrix gu = p.G(used, Eigen::all);
    const Matrix Z = factor->solve(Matrix(gu.transpose()));
    Matrix W = gu * Z;
    W = 0.5 * (W + W.transpose()).eval();
    const Vector b = p.g0(used) + gu * u_free;
    const Eigen::Index mu = b.size();

    Vector lam = Vector::Zero(mu);
    const double omega = W.diagonal().maxCoeff();
    const double beta = b.cwiseAbs().maxCoeff();
    if (beta > 0.0 && b.minCoeff() < 0.0) {
      if (!(omega > 0.0)) {
        throw NonConvergenceError("solve_forward: gap cannot be closed (constraint rows do not act on free dofs)", {});
      }
      const Matrix Wn = W / omega;
      const Vector bn = b / beta;
      Vector start;
      if (opts.lambda_start.size() == p.m()) start = opts.lambda_start(used) * omega / beta;
      const LcpResult ip = interior_point(Wn, bn, opts, start);
      sol.iterations = ip.iterations;

      std::vector<bool> active(mu);
      for (Eigen::Index i = 0; i < mu; ++i) active[i] = ip.lambda(i) > ip.s(i);
      Vector polished;
      if (opts.polish && polish(W, b, active, polished)) {
        lam = polished;
        sol.polished = true;
      } else if (ip.converged) {
        lam = ip.lambda * (beta / omega);
        for (Eigen::Index i = 0; i < mu; ++i)
          if (lam(i) < opts.clip * lam.maxCoeff()) lam(i) = 0.0;
      } else {
        const Vector r = ip.s - Wn * ip.lambda - bn;
        throw NonConvergenceError(
            "solve_forward: interior point did not converge in " + std::to_string(opts.max_iter) +
                " iterations",
            {r.cwiseAbs().maxCoeff(), ip.lambda.cwiseProduct(ip.s).maxCoeff()});
      }
      sol.u = u_free + Z * lam;
    }
    // All gaps open (b >= 0): lambda = 0 is the exact solution.
    sol.lambda(used) = lam;
  }
  sol.gap = p.g0 + p.G * sol.u;
  sol.kkt = kkt_residuals(p, sol.u, sol.lambda);
  return sol;
}

}  // namespace contactopt::forward
