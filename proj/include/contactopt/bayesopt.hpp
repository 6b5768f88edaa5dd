#pragma once

// Constrained Bayesian optimization: zero-mean GP surrogates with an isotropic
// squared-exponential kernel, expected improvement weighted by the
// probability of feasibility, Latin hypercube initialization and random-search
// acquisition maximization.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "contactopt/linalg.hpp"

namespace contactopt::bayesopt {

using linalg::Matrix;
using linalg::Vector;

/// Portable RNG: mt19937_64 with uniforms built from the top 53 bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

struct GpOptions {
  double jitter = 1e-8;
  double max_jitter = 1e-4;
  bool fit_theta = true;
  double theta = 1.0;  // used when fit_theta is false
  double theta_min = 1e-2;
  double theta_max = 1e1;
  int grid_points = 61;
  bool standardize = true;
};

/// k(x, x') = exp(-|x - x'|^2 / theta^2)
double se_kernel(const Vector& a, const Vector& b, double theta);

class GpModel {
 public:
  Matrix X;          // T x p, inputs as given (callers box-scale to [0,1]^p)
  Vector y;          // standardized outputs
  double y_mean = 0.0;
  double y_std = 1.0;
  double theta = 1.0;
  double jitter = 1e-8;
  linalg::Cholesky chol;  // of k(X, X) + jitter I
  Vector alpha;           // (k(X, X) + jitter I)^{-1} y

  struct Posterior {
    double mu;
    double sigma2;
  };
  /// Posterior in standardized units.
  Posterior posterior_standardized(const Vector& x) const;
  /// Posterior in output units.
  Posterior posterior(const Vector& x) const;
  /// Batched posterior in standardized units; rows of `points` are inputs.
  void posterior_standardized(const Matrix& points, Vector& mu, Vector& sigma2) const;

  double log_marginal_likelihood() const;
};

/// Log marginal likelihood of zero-mean outputs y under the SE kernel:
/// -1/2 y^T K^{-1} y - 1/2 log|K| - T/2 log(2 pi), K = k(X, X) + jitter I.
double log_marginal_likelihood(const Matrix& X, const Vector& y, double theta, double jitter);

/// Fits a GP. theta maximizes the log marginal likelihood over a log grid
/// refined by golden-section search. A failed factorization multiplies the
/// jitter by 10 up to max_jitter, then raises FactorizationError.
GpModel gp_fit(const Matrix& X, const Vector& y, const GpOptions& opts = {});

double normal_cdf(double z);
double normal_pdf(double z);

/// EI for maximization: (mu - a_plus - xi) Phi(Z) + sigma phi(Z) with
/// Z = (mu - a_plus - xi) / sigma, and 0 when sigma = 0.
double expected_improvement(double mu, double sigma, double a_plus, double xi);

/// Pr(c >= 0) under N(mu, sigma^2); a step function when sigma = 0.
double probability_nonnegative(double mu, double sigma);

/// PF(x) EI(x) for minimization of the objective modelled by `objective`.
/// `best_objective` is the smallest feasible observed objective; without one
/// the acquisition is PF alone. xi is in standardized units.
double constrained_ei(const GpModel& objective, const std::vector<GpModel>& constraints,
                      const Vector& x, std::optional<double> best_objective, double xi);

/// n x p samples with exactly one sample per bin of each coordinate.
Matrix latin_hypercube(int n, const Vector& lower, const Vector& upper, Rng& rng);
Matrix latin_hypercube(int n, const Vector& lower, const Vector& upper, std::uint64_t seed);

struct CboEvaluation {
  double a = 0.0;
  Vector c;
};

struct CboProblem {
  int p = 0;
  int q = 0;
  Vector lower;
  Vector upper;
  /// Throwing any contactopt::Error marks the sample as a failed simulation.
  std::function<CboEvaluation(const Vector&)> eval;
};

struct CboOptions {
  int n_init = 8;
  int budget = 50;  // acquisition iterations after the initial samples
  int n_candidates = 10000;
  double xi = 0.01;
  bool polish = false;
  std::uint64_t seed = 0;
  GpOptions gp;
};

struct Sample {
  int iter = 0;  // 0 for initial samples
  Vector rho;
  double a = 0.0;
  Vector c;
  bool feasible = false;
  bool failed = false;
  std::optional<double> acquisition;
};

/// Index of the feasible sample with the smallest objective (first on ties).
std::optional<std::size_t> best_feasible(const std::vector<Sample>& samples);

struct CboResult {
  std::vector<Sample> samples;
  std::optional<std::size_t> best;  // index into samples
  /// iter,rho0..,objective,c0..,feasible,acquisition_value
  void write_csv(std::ostream& os) const;
};

/// Algorithm: n_init LHS samples plus the feasible seed, then `budget`
/// iterations of fit / maximize EI_C over random candidates / evaluate.
/// With budget 0 no surrogate is needed and only the seed is evaluated.
CboResult run_cbo(const CboProblem& problem, const std::optional<Vector>& feasible_seed,
                  const CboOptions& opts = {});

}  // namespace contactopt::bayesopt
