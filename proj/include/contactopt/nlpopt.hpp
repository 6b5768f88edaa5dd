#pragma once

// Interior-point outer optimizer for
//   min a(rho)  s.t.  c(rho) >= 0,  lower <= rho <= upper
// with slacks c(rho) - s = 0, log barriers on s and the bounds, a damped BFGS
// Lagrangian Hessian and a filter line search.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace contactopt::nlpopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Evaluation {
  double a = 0.0;
  Vector c;      // q
  Vector grad_a; // p
  Matrix jac_c;  // q x p
};

struct NlpProblem {
  int p = 0;
  int q = 0;
  Vector lower;
  Vector upper;
  /// May throw DegeneracyError (retried at a perturbed point) or any other
  /// contactopt::Error (treated as a failed trial point).
  std::function<Evaluation(const Vector&)> eval;
};

struct NlpOptions {
  int max_iter = 200;
  double dual_tol = 1e-4;
  double compl_tol = 1e-7;
  double viol_tol = 1e-6;
  double mu_init = 0.1;
  double mu_min = 1e-9;
  int degeneracy_retries = 3;
  double retry_perturbation = 1e-6;
  unsigned long seed = 0;  // seeds the retry perturbations
  /// Barrier parameter is multiplied by this factor when the barrier problem
  /// is solved to 10 mu.
  double mu_factor = 0.2;
};

enum class StepType { Initial, Normal, Restoration };

struct IterateRecord {
  int iter = 0;
  Vector rho;
  double objective = 0.0;
  double violation = 0.0;
  double dual_opt = 0.0;
  StepType step = StepType::Normal;
};

struct IterateLog {
  std::vector<IterateRecord> rows;
  /// iter,rho0..rho{p-1},objective,viol,dual_opt,step_type
  void write_csv(std::ostream& os) const;
};

enum class NlpStatus { Converged, MaxIterations, Infeasible, EvaluationFailure };

std::string to_string(NlpStatus s);
std::string to_string(StepType s);

struct NlpResult {
  Vector rho;
  double objective = 0.0;
  Vector c;
  Vector multipliers;  // y for c >= 0
  double violation = 0.0;
  double dual_opt = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
  int evaluations = 0;
  NlpStatus status = NlpStatus::MaxIterations;
  IterateLog log;
  /// Best feasible iterate seen (violation <= viol_tol); empty if none.
  Vector best_feasible;
};

NlpResult solve_nlp(const NlpProblem& prob, const Vector& rho0, const NlpOptions& opts = {});

/// Largest constraint violation max(0, -min c).
double violation(const Vector& c);

}  // namespace contactopt::nlpopt
