#include "contactopt/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace contactopt::bayesopt {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double se_kernel(const Vector& a, const Vector& b, double theta) {
  return std::exp(-(a - b).squaredNorm() / (theta * theta));
}

namespace {

Matrix squared_distances(const Matrix& A, const Matrix& B) {
  const Vector a2 = A.rowwise().squaredNorm();
  const Vector b2 = B.rowwise().squaredNorm();
  Matrix d = -2.0 * A * B.transpose();
  d.colwise() += a2;
  d.rowwise() += b2.transpose();
  return d.cwiseMax(0.0);
}

Matrix kernel_from_d2(const Matrix& d2, double theta) {
  return (-d2.array() / (theta * theta)).exp().matrix();
}

// Factor k(X,X) + jitter I, escalating the jitter on failure. Returns false if
// even max_jitter fails.
bool factor(const Matrix& d2, double theta, double jitter0, double max_jitter, linalg::Cholesky& out,
            double& jitter_used) {
  Matrix K = kernel_from_d2(d2, theta);
  for (double j = jitter0; j <= max_jitter * (1.0 + 1e-9); j *= 10.0) {
    Matrix Kj = K;
    Kj.diagonal().array() += j;
    try {
      out = linalg::Cholesky(Kj);
      jitter_used = j;
      return true;
    } catch (const FactorizationError&) {
    }
  }
  return false;
}

double lml_from_factor(const linalg::Cholesky& chol, const Vector& y) {
  const Vector alpha = chol.solve(y);
  const double T = static_cast<double>(y.size());
  return -0.5 * y.dot(alpha) - 0.5 * chol.log_determinant() -
         0.5 * T * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double log_marginal_likelihood(const Matrix& X, const Vector& y, double theta, double jitter) {
  if (X.rows() != y.size()) throw DimensionError("log_marginal_likelihood: size mismatch");
  Matrix K = kernel_from_d2(squared_distances(X, X), theta);
  K.diagonal().array() += jitter;
  return lml_from_factor(linalg::Cholesky(K), y);
}

GpModel::Posterior GpModel::posterior_standardized(const Vector& x) const {
  Vector mu, s2;
  posterior_standardized(Matrix(x.transpose()), mu, s2);
  return {mu(0), s2(0)};
}

GpModel::Posterior GpModel::posterior(const Vector& x) const {
  const auto ps = posterior_standardized(x);
  return {y_mean + y_std * ps.mu, y_std * y_std * ps.sigma2};
}

void GpModel::posterior_standardized(const Matrix& points, Vector& mu, Vector& sigma2) const {
  if (points.cols() != X.cols()) throw DimensionError("gp posterior: input dimension mismatch");
  const Matrix ks = kernel_from_d2(squared_distances(points, X), theta);  // N x T
  mu = ks * alpha;
  const Matrix v = chol.solve_lower(Matrix(ks.transpose()));               // T x N
  sigma2 = (1.0 - v.colwise().squaredNorm().array()).matrix().transpose();
  sigma2 = sigma2.cwiseMax(0.0);
}

double GpModel::log_marginal_likelihood() const { return lml_from_factor(chol, y); }

GpModel gp_fit(const Matrix& X, const Vector& y, const GpOptions& opts) {
  if (X.rows() < 1 || X.rows() != y.size()) throw DimensionError("gp_fit: need T >= 1 matching rows");
  if (!(opts.jitter > 0.0) || opts.max_jitter < opts.jitter) throw DomainError("gp_fit: invalid jitter range");
  GpModel m;
  m.X = X;
  if (opts.standardize) {
    m.y_mean = y.mean();
    const double var = (y.array() - m.y_mean).square().mean();
    m.y_std = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  m.y = (y.array() - m.y_mean) / m.y_std;
  const Matrix d2 = squared_distances(X, X);

  auto lml_at = [&](double theta) {
    linalg::Cholesky c;
    double j = 0;
    if (!factor(d2, theta, opts.jitter, opts.max_jitter, c, j)) {
      return -std::numeric_limits<double>::infinity();
    }
    return lml_from_factor(c, m.y);
  };

  double theta = opts.theta;
  if (opts.fit_theta) {
    const double l0 = std::log(opts.theta_min), l1 = std::log(opts.theta_max);
    const int n = std::max(2, opts.grid_points);
    std::vector<double> grid(n), vals(n);
    int best = 0;
    for (int i = 0; i < n; ++i) {
      grid[i] = l0 + (l1 - l0) * i / (n - 1);
      vals[i] = lml_at(std::exp(grid[i]));
      if (vals[i] > vals[best]) best = i;
    }
    if (!std::isfinite(vals[best])) {
      throw FactorizationError("gp_fit: covariance not positive definite up to the maximum jitter", 0);
    }
    double a = grid[std::max(0, best - 1)], b = grid[std::min(n - 1, best + 1)];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = lml_at(std::exp(c)), fd = lml_at(std::exp(d));
    for (int it = 0; it < 40; ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = lml_at(std::exp(c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = lml_at(std::exp(d));
      }
    }
    const double lt = 0.5 * (a + b);
    theta = lml_at(std::exp(lt)) >= vals[best] ? std::exp(lt) : std::exp(grid[best]);
  }
  m.theta = theta;
  if (!factor(d2, theta, opts.jitter, opts.max_jitter, m.chol, m.jitter)) {
    throw FactorizationError("gp_fit: covariance not positive definite up to the maximum jitter", 0);
  }
  m.alpha = m.chol.solve(m.y);
  return m;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double expected_improvement(double mu, double sigma, double a_plus, double xi) {
  if (!(sigma > 0.0)) return 0.0;
  const double imp = mu - a_plus - xi;
  const double z = imp / sigma;
  return std::max(0.0, imp * normal_cdf(z) + sigma * normal_pdf(z));
}

double probability_nonnegative(double mu, double sigma) {
  if (!(sigma > 0.0)) return mu >= 0.0 ? 1.0 : 0.0;
  return normal_cdf(mu / sigma);
}

namespace {

// EI_C on a batch of (box-scaled) points; d2 rows are candidates.
Vector acquisition_batch(const GpModel& objective, const std::vector<GpModel>& constraints,
                         const Matrix& points, std::optional<double> best_objective, double xi) {
  const Eigen::Index n = points.rows();
  Vector acq = Vector::Ones(n);
  Vector mu, s2;
  for (const auto& gc : constraints) {
    gc.posterior_standardized(points, mu, s2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = gc.y_mean + gc.y_std * mu(i);
      const double s = gc.y_std * std::sqrt(s2(i));
      acq(i) *= probability_nonnegative(m, s);
    }
  }
  if (best_objective) {
    objective.posterior_standardized(points, mu, s2);
    const double f_plus = -(*best_objective - objective.y_mean) / objective.y_std;
    for (Eigen::Index i = 0; i < n; ++i) {
      acq(i) *= expected_improvement(-mu(i), std::sqrt(s2(i)), f_plus, xi);
    }
  }
  return acq;
}

}  // namespace

double constrained_ei(const GpModel& objective, const std::vector<GpModel>& constraints,
                      const Vector& x, std::optional<double> best_objective, double xi) {
  return acquisition_batch(objective, constraints, Matrix(x.transpose()), best_objective, xi)(0);
}

Matrix latin_hypercube(int n, const Vector& lower, const Vector& upper, Rng& rng) {
  if (n < 1) throw DomainError("latin_hypercube: n must be >= 1");
  if (lower.size() != upper.size()) throw DimensionError("latin_hypercube: bounds size mismatch");
  const Eigen::Index p = lower.size();
  Matrix out(n, p);
  std::vector<int> perm(n);
  for (Eigen::Index d = 0; d < p; ++d) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    // Fisher-Yates with the portable uniform.
    for (int i = n - 1; i > 0; --i) {
      const int j = std::min(i, static_cast<int>(rng.uniform() * (i + 1)));
      std::swap(perm[i], perm[j]);
    }
    for (int i = 0; i < n; ++i) {
      const double u = (perm[i] + rng.uniform()) / n;
      out(i, d) = lower(d) + u * (upper(d) - lower(d));
    }
  }
  return out;
}

Matrix latin_hypercube(int n, const Vector& lower, const Vector& upper, std::uint64_t seed) {
  Rng rng(seed);
  return latin_hypercube(n, lower, upper, rng);
}

std::optional<std::size_t> best_feasible(const std::vector<Sample>& samples) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].feasible) continue;
    if (!best || samples[i].a < samples[*best].a) best = i;
  }
  return best;
}

void CboResult::write_csv(std::ostream& os) const {
  const Eigen::Index p = samples.empty() ? 0 : samples.front().rho.size();
  Eigen::Index q = 0;
  for (const auto& s : samples) q = std::max(q, s.c.size());
  os << "iter";
  for (Eigen::Index i = 0; i < p; ++i) os << ",rho" << i;
  os << ",objective";
  for (Eigen::Index j = 0; j < q; ++j) os << ",c" << j;
  os << ",feasible,acquisition_value\n";
  os.precision(17);
  for (const auto& s : samples) {
    os << s.iter;
    for (Eigen::Index i = 0; i < p; ++i) os << ',' << s.rho(i);
    if (s.failed) {
      os << ",nan";
      for (Eigen::Index j = 0; j < q; ++j) os << ",nan";
    } else {
      os << ',' << s.a;
      for (Eigen::Index j = 0; j < q; ++j) os << ',' << s.c(j);
    }
    os << ',' << (s.feasible ? 1 : 0) << ',';
    if (s.acquisition) {
      os << *s.acquisition;
    } else {
      os << "nan";
    }
    os << '\n';
  }
}

namespace {

Sample evaluate_sample(const CboProblem& prob, const Vector& rho, int iter) {
  Sample s;
  s.iter = iter;
  s.rho = rho;
  try {
    const CboEvaluation e = prob.eval(rho);
    if (e.c.size() != prob.q) throw DimensionError("run_cbo: evaluator returned wrong constraint count");
    if (!std::isfinite(e.a) || !e.c.allFinite()) {
      s.failed = true;
    } else {
      s.a = e.a;
      s.c = e.c;
      s.feasible = prob.q == 0 || e.c.minCoeff() >= 0.0;
    }
  } catch (const DimensionError&) {
    throw;
  } catch (const Error&) {
    s.failed = true;
  }
  if (s.failed) {
    s.feasible = false;
    s.c = Vector::Constant(prob.q, std::numeric_limits<double>::quiet_NaN());
  }
  return s;
}

// Training targets with failed samples replaced by pessimistic finite values.
void training_data(const std::vector<Sample>& samples, int q, Vector& a, Matrix& c) {
  const Eigen::Index T = static_cast<Eigen::Index>(samples.size());
  a.resize(T);
  c.resize(T, q);
  double amax = -std::numeric_limits<double>::infinity();
  Vector cmin = Vector::Constant(q, std::numeric_limits<double>::infinity());
  Vector cmax = Vector::Constant(q, -std::numeric_limits<double>::infinity());
  bool any = false;
  for (const auto& s : samples) {
    if (s.failed) continue;
    any = true;
    amax = std::max(amax, s.a);
    cmin = cmin.cwiseMin(s.c);
    cmax = cmax.cwiseMax(s.c);
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& s = samples[t];
    if (!s.failed) {
      a(t) = s.a;
      c.row(t) = s.c.transpose();
    } else if (any) {
      a(t) = amax;
      for (int j = 0; j < q; ++j) c(t, j) = cmin(j) - std::max(cmax(j) - cmin(j), 1.0);
    } else {
      a(t) = 0.0;
      c.row(t).setConstant(-1.0);
    }
  }
}

// Projected ascent on the acquisition from a start point, central-difference
// gradients in the unit box.
Vector polish_point(const GpModel& obj, const std::vector<GpModel>& cons, Vector x,
                    std::optional<double> best, double xi, double& value) {
  auto f = [&](const Vector& z) { return constrained_ei(obj, cons, z, best, xi); };
  double fx = f(x);
  double step = 0.05;
  for (int it = 0; it < 50 && step > 1e-8; ++it) {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-6;
      Vector xp = x, xm = x;
      xp(i) = std::min(1.0, x(i) + h);
      xm(i) = std::max(0.0, x(i) - h);
      g(i) = (f(xp) - f(xm)) / (xp(i) - xm(i));
    }
    const double gn = g.norm();
    if (!(gn > 0.0)) break;
    const Vector xt = (x + step * g / gn).cwiseMax(0.0).cwiseMin(1.0);
    const double ft = f(xt);
    if (ft > fx) {
      x = xt;
      fx = ft;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  value = fx;
  return x;
}

}  // namespace

CboResult run_cbo(const CboProblem& prob, const std::optional<Vector>& feasible_seed,
                  const CboOptions& opts) {
  if (prob.lower.size() != prob.p || prob.upper.size() != prob.p || prob.p < 1) {
    throw DimensionError("run_cbo: bounds do not match p");
  }
  if (!prob.eval) throw DomainError("run_cbo: no evaluator");
  if (opts.budget < 0 || opts.n_init < 0) throw DomainError("run_cbo: negative budget");
  Rng rng(opts.seed);
  CboResult res;
  const Vector width = prob.upper - prob.lower;

  if ((opts.budget > 0 || !feasible_seed) && opts.n_init > 0) {
    const Matrix init = latin_hypercube(opts.n_init, prob.lower, prob.upper, rng);
    for (Eigen::Index i = 0; i < init.rows(); ++i)
      res.samples.push_back(evaluate_sample(prob, init.row(i).transpose(), 0));
  }
  if (feasible_seed) {
    if (feasible_seed->size() != prob.p) throw DimensionError("run_cbo: seed dimension mismatch");
    res.samples.push_back(evaluate_sample(prob, *feasible_seed, 0));
  }

  for (int it = 1; it <= opts.budget; ++it) {
    if (res.samples.empty()) break;
    const Eigen::Index T = static_cast<Eigen::Index>(res.samples.size());
    Matrix X(T, prob.p);
    for (Eigen::Index t = 0; t < T; ++t)
      X.row(t) = (res.samples[t].rho - prob.lower).cwiseQuotient(width).transpose();
    Vector a;
    Matrix c;
    training_data(res.samples, prob.q, a, c);
    const GpModel obj = gp_fit(X, a, opts.gp);
    std::vector<GpModel> cons;
    cons.reserve(prob.q);
    for (int j = 0; j < prob.q; ++j) cons.push_back(gp_fit(X, c.col(j), opts.gp));

    std::optional<double> best;
    if (auto b = best_feasible(res.samples)) best = res.samples[*b].a;

    Matrix cand(opts.n_candidates, prob.p);
    for (int i = 0; i < opts.n_candidates; ++i)
      for (int d = 0; d < prob.p; ++d) cand(i, d) = rng.uniform();
    const Vector acq = acquisition_batch(obj, cons, cand, best, opts.xi);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < acq.size(); ++i)
      if (acq(i) > acq(arg)) arg = i;
    Vector x = cand.row(arg).transpose();
    double value = acq(arg);
    if (opts.polish) {
      double pv = 0.0;
      const Vector xp = polish_point(obj, cons, x, best, opts.xi, pv);
      if (pv > value) {
        x = xp;
        value = pv;
      }
    }
    const Vector rho = prob.lower + width.cwiseProduct(x);
    Sample s = evaluate_sample(prob, rho, it);
    s.acquisition = value;
    res.samples.push_back(std::move(s));
  }
  res.best = best_feasible(res.samples);
  return res;
}

}  // namespace contactopt::bayesopt
