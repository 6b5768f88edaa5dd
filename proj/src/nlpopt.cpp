#include "contactopt/nlpopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "contactopt/errors.hpp"

namespace contactopt::nlpopt {

double violation(const Vector& c) {
  if (c.size() == 0) return 0.0;
  return std::max(0.0, -c.minCoeff());
}

std::string to_string(NlpStatus s) {
  switch (s) {
    case NlpStatus::Converged: return "converged";
    case NlpStatus::MaxIterations: return "max_iterations";
    case NlpStatus::Infeasible: return "infeasible";
    case NlpStatus::EvaluationFailure: return "evaluation_failure";
  }
  return "unknown";
}

std::string to_string(StepType s) {
  switch (s) {
    case StepType::Initial: return "initial";
    case StepType::Normal: return "normal";
    case StepType::Restoration: return "restoration";
  }
  return "unknown";
}

void IterateLog::write_csv(std::ostream& os) const {
  const auto p = rows.empty() ? 0 : rows.front().rho.size();
  os << "iter";
  for (Eigen::Index i = 0; i < p; ++i) os << ",rho" << i;
  os << ",objective,viol,dual_opt,step_type\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.iter;
    for (Eigen::Index i = 0; i < r.rho.size(); ++i) os << ',' << r.rho(i);
    os << ',' << r.objective << ',' << r.violation << ',' << r.dual_opt << ',' << to_string(r.step)
       << '\n';
  }
}

namespace {

constexpr double kSMax = 100.0;
constexpr double kSigmaBound = 1e10;

// Problem seen in box-scaled variables x in [0, 1]^p with scaled functions.
class Scaled {
 public:
  Scaled(const NlpProblem& prob, const NlpOptions& opts) : prob_(prob), opts_(opts), rng_(opts.seed) {
    width_ = prob.upper - prob.lower;
    con_scale_ = Vector::Ones(prob.q);
  }

  Vector to_rho(const Vector& x) const { return prob_.lower + width_.cwiseProduct(x); }
  Vector to_x(const Vector& rho) const { return (rho - prob_.lower).cwiseQuotient(width_); }

  struct Point {
    Vector x;
    double a = 0;   // scaled objective
    Vector c;       // scaled constraints
    Vector g;       // scaled gradient wrt x
    Matrix J;       // scaled Jacobian wrt x
    Evaluation raw;
  };

  // Evaluates at x, retrying at perturbed points after a degeneracy error.
  // Returns false when the evaluation fails.
  bool evaluate(Vector x, Point& out, bool allow_retry = true) {
    std::uniform_real_distribution<double> pert(-opts_.retry_perturbation, opts_.retry_perturbation);
    const int tries = allow_retry ? opts_.degeneracy_retries + 1 : 1;
    for (int t = 0; t < tries; ++t) {
      if (t > 0) {
        Vector rho = to_rho(x);
        for (Eigen::Index i = 0; i < rho.size(); ++i) rho(i) += pert(rng_);
        rho = rho.cwiseMax(prob_.lower).cwiseMin(prob_.upper);
        x = to_x(rho);
      }
      try {
        ++evaluations;
        Evaluation e = prob_.eval(to_rho(x));
        if (e.c.size() != prob_.q || e.grad_a.size() != prob_.p || e.jac_c.rows() != prob_.q ||
            e.jac_c.cols() != prob_.p) {
          throw DimensionError("solve_nlp: evaluator returned wrong dimensions");
        }
        if (!std::isfinite(e.a) || !e.c.allFinite() || !e.grad_a.allFinite() ||
            !e.jac_c.allFinite()) {
          return false;
        }
        out.x = x;
        out.raw = e;
        scale(out);
        return true;
      } catch (const DegeneracyError&) {
        continue;
      } catch (const DimensionError&) {
        throw;
      } catch (const Error&) {
        return false;
      }
    }
    return false;
  }

  // Gradient-based scaling fixed at the first evaluation.
  void fix_scaling(const Evaluation& e) {
    const Vector ga = e.grad_a.cwiseProduct(width_);
    obj_scale_ = std::min(1.0, kSMax / std::max(ga.cwiseAbs().maxCoeff(), 1e-300));
    con_scale_ = Vector::Ones(prob_.q);
    for (int i = 0; i < prob_.q; ++i) {
      const double gi = (e.jac_c.row(i).transpose().cwiseProduct(width_)).cwiseAbs().maxCoeff();
      con_scale_(i) = std::min(1.0, kSMax / std::max(gi, 1e-300));
    }
  }

  double obj_scale() const { return obj_scale_; }
  const Vector& con_scale() const { return con_scale_; }

  int evaluations = 0;

 private:
  void scale(Point& pt) const {
    pt.a = obj_scale_ * pt.raw.a;
    pt.c = con_scale_.cwiseProduct(pt.raw.c);
    pt.g = obj_scale_ * pt.raw.grad_a.cwiseProduct(width_);
    pt.J = con_scale_.asDiagonal() * pt.raw.jac_c * width_.asDiagonal();
  }

  const NlpProblem& prob_;
  const NlpOptions& opts_;
  std::mt19937_64 rng_;
  Vector width_;
  double obj_scale_ = 1.0;
  Vector con_scale_;
};

struct State {
  Scaled::Point pt;
  Vector s, y, zl, zu;
};

struct FilterEntry {
  double theta, phi;
};

double barrier_phi(const Scaled::Point& pt, const Vector& s, double mu) {
  double phi = pt.a;
  for (Eigen::Index i = 0; i < s.size(); ++i) phi -= mu * std::log(s(i));
  for (Eigen::Index i = 0; i < pt.x.size(); ++i)
    phi -= mu * (std::log(pt.x(i)) + std::log(1.0 - pt.x(i)));
  return phi;
}

double theta_of(const Scaled::Point& pt, const Vector& s) { return (pt.c - s).lpNorm<1>(); }

double max_step_to_boundary(const Vector& v, const Vector& dv, double tau) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -tau * v(i) / dv(i));
  return alpha;
}

struct Errors {
  double dual;   // scaled stationarity
  double compl_mu;
  double compl0;
  double primal;  // ||c - s||_inf
};

Errors errors(const State& st, double mu) {
  const auto& pt = st.pt;
  const Vector rx = pt.g - pt.J.transpose() * st.y - st.zl + st.zu;
  const int p = static_cast<int>(pt.x.size()), q = static_cast<int>(st.s.size());
  const double zsum = st.y.lpNorm<1>() + st.zl.lpNorm<1>() + st.zu.lpNorm<1>();
  const double sd = std::max(kSMax, zsum / std::max(1, q + 2 * p)) / kSMax;
  Errors e;
  e.dual = rx.cwiseAbs().maxCoeff() / sd;
  double cm = 0, c0 = 0;
  auto upd = [&](double prod) {
    cm = std::max(cm, std::abs(prod - mu));
    c0 = std::max(c0, std::abs(prod));
  };
  for (int i = 0; i < q; ++i) upd(st.y(i) * st.s(i));
  for (int i = 0; i < p; ++i) {
    upd(st.zl(i) * pt.x(i));
    upd(st.zu(i) * (1.0 - pt.x(i)));
  }
  e.compl_mu = cm / sd;
  e.compl0 = c0 / sd;
  e.primal = q ? (pt.c - st.s).cwiseAbs().maxCoeff() : 0.0;
  return e;
}

void bfgs_update(Matrix& H, const Vector& sk, const Vector& yk, bool& first) {
  const double sts = sk.squaredNorm();
  if (sts < 1e-24) return;
  if (first) {
    const double sy = sk.dot(yk);
    if (sy > 0.0) H = Matrix::Identity(H.rows(), H.cols()) * (yk.squaredNorm() / sy);
    first = false;
  }
  const Vector hs = H * sk;
  const double shs = sk.dot(hs);
  const double sy = sk.dot(yk);
  double th = 1.0;
  if (sy < 0.2 * shs) th = 0.8 * shs / (shs - sy);
  const Vector r = th * yk + (1.0 - th) * hs;
  const double sr = sk.dot(r);
  if (!(sr > 0.0) || !(shs > 0.0)) return;
  H += r * r.transpose() / sr - hs * hs.transpose() / shs;
  H = 0.5 * (H + H.transpose()).eval();
}

}  // namespace

NlpResult solve_nlp(const NlpProblem& prob, const Vector& rho0, const NlpOptions& opts) {
  const int p = prob.p, q = prob.q;
  if (prob.lower.size() != p || prob.upper.size() != p || rho0.size() != p || p < 1) {
    throw DimensionError("solve_nlp: dimension mismatch");
  }
  for (int i = 0; i < p; ++i) {
    if (!(prob.lower(i) < prob.upper(i))) throw DomainError("solve_nlp: lower must be < upper");
  }
  if (!prob.eval) throw DomainError("solve_nlp: no evaluator");

  Scaled sc(prob, opts);
  NlpResult res;

  // Starting point pushed into the interior of the box.
  Vector x0 = sc.to_x(rho0);
  for (int i = 0; i < p; ++i) x0(i) = std::clamp(x0(i), 1e-2, 1.0 - 1e-2);

  // First evaluation with unit scaling, then fix the scaling and rescale.
  State st;
  {
    Scaled::Point tmp;
    if (!sc.evaluate(x0, tmp)) {
      res.rho = sc.to_rho(x0);
      res.status = NlpStatus::EvaluationFailure;
      res.evaluations = sc.evaluations;
      return res;
    }
    sc.fix_scaling(tmp.raw);
    x0 = tmp.x;
    if (!sc.evaluate(x0, st.pt, false)) {
      res.rho = sc.to_rho(x0);
      res.status = NlpStatus::EvaluationFailure;
      res.evaluations = sc.evaluations;
      return res;
    }
  }

  double mu = opts.mu_init;
  st.s = Vector(q);
  for (int i = 0; i < q; ++i) st.s(i) = std::max(st.pt.c(i), 1e-2 * std::max(1.0, std::abs(st.pt.c(i))));
  st.y = mu * st.s.cwiseInverse();
  st.zl = mu * st.pt.x.cwiseInverse();
  st.zu = mu * (Vector::Ones(p) - st.pt.x).cwiseInverse();

  Matrix H = Matrix::Identity(p, p);
  bool first_update = true;
  std::vector<FilterEntry> filter;
  const double theta0 = theta_of(st.pt, st.s);
  const double theta_max = 1e4 * std::max(1.0, theta0);
  const double theta_min = 1e-4 * std::max(1.0, theta0);

  double best_feasible_obj = std::numeric_limits<double>::infinity();
  auto record = [&](int iter, StepType type) {
    IterateRecord r;
    r.iter = iter;
    r.rho = sc.to_rho(st.pt.x);
    r.objective = st.pt.raw.a;
    r.violation = violation(st.pt.raw.c);
    r.dual_opt = errors(st, 0.0).dual;
    r.step = type;
    res.log.rows.push_back(r);
    if (r.violation <= opts.viol_tol &&
        (res.best_feasible.size() == 0 || r.objective < best_feasible_obj)) {
      res.best_feasible = r.rho;
      best_feasible_obj = r.objective;
    }
  };
  record(0, StepType::Initial);

  int iter = 0;
  res.status = NlpStatus::MaxIterations;
  for (; iter < opts.max_iter; ++iter) {
    Errors e0 = errors(st, 0.0);
    const double viol = violation(st.pt.raw.c);
    if (e0.dual <= opts.dual_tol && e0.compl0 <= opts.compl_tol && viol <= opts.viol_tol &&
        e0.primal <= std::max(opts.viol_tol, 1e-8)) {
      res.status = NlpStatus::Converged;
      break;
    }
    // Monotone barrier update.
    for (;;) {
      const Errors em = errors(st, mu);
      const double emu = std::max({em.dual, em.compl_mu, em.primal});
      if (emu > 10.0 * mu || mu <= opts.mu_min) break;
      mu = std::max(opts.mu_min, std::min(opts.mu_factor * mu, std::pow(mu, 1.5)));
      filter.clear();
    }

    const auto& pt = st.pt;
    const Vector xl = pt.x, xu = Vector::Ones(p) - pt.x;
    const Vector sigma_x = st.zl.cwiseQuotient(xl) + st.zu.cwiseQuotient(xu);
    const Vector D = st.y.cwiseQuotient(st.s);
    const Vector bx = mu * xl.cwiseInverse() - mu * xu.cwiseInverse();
    Matrix M = H;
    M.diagonal() += sigma_x;
    M += pt.J.transpose() * D.asDiagonal() * pt.J;
    const Vector cs = pt.c - st.s;
    const Vector rhs = -pt.g + bx + pt.J.transpose() * (mu * st.s.cwiseInverse() - D.cwiseProduct(cs));
    Eigen::LLT<Matrix> llt(M);
    double reg = 1e-8 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    while (llt.info() != Eigen::Success && reg < 1e8) {
      Matrix Mr = M;
      Mr.diagonal().array() += reg;
      llt.compute(Mr);
      reg *= 10;
    }
    const Vector dx = llt.solve(rhs);
    const Vector ds = pt.J * dx + cs;
    const Vector dy = mu * st.s.cwiseInverse() - st.y - D.cwiseProduct(ds);
    const Vector dzl = mu * xl.cwiseInverse() - st.zl - st.zl.cwiseQuotient(xl).cwiseProduct(dx);
    const Vector dzu = mu * xu.cwiseInverse() - st.zu + st.zu.cwiseQuotient(xu).cwiseProduct(dx);

    const double tau = std::max(0.99, 1.0 - mu);
    double alpha = std::min({max_step_to_boundary(xl, dx, tau), max_step_to_boundary(xu, -dx, tau),
                             max_step_to_boundary(st.s, ds, tau)});
    const double alpha_z = std::min({max_step_to_boundary(st.y, dy, tau),
                                     max_step_to_boundary(st.zl, dzl, tau),
                                     max_step_to_boundary(st.zu, dzu, tau)});

    const double phi = barrier_phi(pt, st.s, mu);
    const double theta = theta_of(pt, st.s);
    const double dphi = (pt.g - bx).dot(dx) - mu * st.s.cwiseInverse().dot(ds);

    bool accepted = false;
    bool degenerate_exhausted = false;
    Scaled::Point trial;
    Vector s_trial;
    for (int ls = 0; ls < 30 && alpha > 1e-12; ++ls, alpha *= 0.5) {
      Vector xt = pt.x + alpha * dx;
      if (!sc.evaluate(xt, trial)) {
        degenerate_exhausted = true;
        break;
      }
      s_trial = st.s + alpha * ds;
      // A retried evaluation may have moved x slightly; keep slacks positive.
      s_trial = s_trial.cwiseMax(1e-14);
      if ((trial.x.array() <= 0.0).any() || (trial.x.array() >= 1.0).any()) continue;
      const double th_t = theta_of(trial, s_trial);
      const double phi_t = barrier_phi(trial, s_trial, mu);
      if (!std::isfinite(phi_t) || th_t > theta_max) continue;
      bool in_filter = false;
      for (const auto& f : filter)
        if (th_t >= f.theta && phi_t >= f.phi) in_filter = true;
      if (in_filter) continue;
      const bool switching = theta <= theta_min && dphi < 0.0 &&
                             alpha * std::pow(-dphi, 2.3) > std::pow(theta, 1.1);
      if (switching) {
        if (phi_t <= phi + 1e-4 * alpha * dphi) {
          accepted = true;
          break;
        }
      } else if (th_t <= (1.0 - 1e-5) * theta || phi_t <= phi - 1e-5 * theta) {
        filter.push_back({(1.0 - 1e-5) * theta, phi - 1e-5 * theta});
        accepted = true;
        break;
      }
    }

    if (accepted) {
      const double az = alpha_z;
      Vector y_new = st.y + az * dy;
      Vector zl_new = st.zl + az * dzl;
      Vector zu_new = st.zu + az * dzu;
      // Keep multipliers close to their primal-dual values.
      const Vector xl_t = trial.x, xu_t = Vector::Ones(p) - trial.x;
      for (int i = 0; i < q; ++i)
        y_new(i) = std::clamp(y_new(i), mu / (kSigmaBound * s_trial(i)), kSigmaBound * mu / s_trial(i));
      for (int i = 0; i < p; ++i) {
        zl_new(i) = std::clamp(zl_new(i), mu / (kSigmaBound * xl_t(i)), kSigmaBound * mu / xl_t(i));
        zu_new(i) = std::clamp(zu_new(i), mu / (kSigmaBound * xu_t(i)), kSigmaBound * mu / xu_t(i));
      }
      const Vector grad_l_old = pt.g - pt.J.transpose() * y_new;
      const Vector grad_l_new = trial.g - trial.J.transpose() * y_new;
      bfgs_update(H, trial.x - pt.x, grad_l_new - grad_l_old, first_update);
      st.pt = trial;
      st.s = s_trial;
      st.y = y_new;
      st.zl = zl_new;
      st.zu = zu_new;
      record(iter + 1, StepType::Normal);
      continue;
    }

    // Feasibility restoration: Gauss-Newton on the violated constraints,
    // then slacks and multipliers are reset.
    (void)degenerate_exhausted;
    const Scaled::Point& cur = st.pt;
    const double v0 = violation(cur.raw.c);
    std::vector<Eigen::Index> V;
    for (int i = 0; i < q; ++i)
      if (cur.c(i) < 1e-3 * std::max(1.0, std::abs(cur.c(i)))) V.push_back(i);
    bool restored = false;
    if (!V.empty()) {
      const Matrix JV = cur.J(V, Eigen::all);
      Vector target(V.size());
      for (std::size_t k = 0; k < V.size(); ++k) target(k) = 1e-3 - cur.c(V[k]);
      Matrix N = JV.transpose() * JV;
      N.diagonal().array() += 1e-6 * std::max(1.0, N.diagonal().maxCoeff());
      N.diagonal() += sigma_x;
      const Vector dr = N.ldlt().solve(JV.transpose() * target);
      double ar = std::min(max_step_to_boundary(xl, dr, 0.99), max_step_to_boundary(xu, -dr, 0.99));
      for (int ls = 0; ls < 30 && ar > 1e-12; ++ls, ar *= 0.5) {
        Scaled::Point t;
        if (!sc.evaluate(cur.x + ar * dr, t)) continue;
        if ((t.x.array() <= 0.0).any() || (t.x.array() >= 1.0).any()) continue;
        const double vt = violation(t.raw.c);
        if (vt < v0 || (v0 == 0.0 && theta_of(t, t.c.cwiseMax(1e-8)) < theta)) {
          st.pt = t;
          restored = true;
          break;
        }
      }
    }
    if (!restored && violation(cur.raw.c) == 0.0) {
      // Feasible but stuck: shrink the barrier and let the slacks catch up.
      mu = std::max(opts.mu_min, opts.mu_factor * mu);
      restored = mu > opts.mu_min;
    }
    if (!restored) {
      res.status = NlpStatus::Infeasible;
      break;
    }
    for (int i = 0; i < q; ++i) st.s(i) = std::max(st.pt.c(i), std::max(mu, 1e-8));
    st.y = mu * st.s.cwiseInverse();
    st.zl = mu * st.pt.x.cwiseInverse();
    st.zu = mu * (Vector::Ones(p) - st.pt.x).cwiseInverse();
    filter.clear();
    record(iter + 1, StepType::Restoration);
  }

  const Errors ef = errors(st, 0.0);
  res.rho = sc.to_rho(st.pt.x);
  res.objective = st.pt.raw.a;
  res.c = st.pt.raw.c;
  res.violation = violation(st.pt.raw.c);
  res.dual_opt = ef.dual;
  res.complementarity = ef.compl0;
  res.iterations = iter;
  res.evaluations = sc.evaluations;
  res.multipliers = Vector(q);
  // Multipliers of the unscaled constraints.
  for (int i = 0; i < q; ++i) res.multipliers(i) = st.y(i) * sc.con_scale()(i) / sc.obj_scale();
  return res;
}

}  // namespace contactopt::nlpopt
