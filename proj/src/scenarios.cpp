#include "contactopt/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "contactopt/errors.hpp"
#include "contactopt/forward.hpp"
#include "contactopt/mortar.hpp"
#include "contactopt/sensitivity.hpp"

namespace contactopt::scenarios {

Groups shared_endpoint_groups(int n, int per_group) {
  if (per_group < 2 || n < per_group || (n - 1) % (per_group - 1) != 0) {
    throw DomainError("shared_endpoint_groups: " + std::to_string(n) + " rows cannot form groups of " +
                      std::to_string(per_group));
  }
  Groups g;
  for (int start = 0; start + per_group <= n; start += per_group - 1) {
    std::vector<int> grp(per_group);
    for (int k = 0; k < per_group; ++k) grp[k] = start + k;
    g.push_back(std::move(grp));
  }
  return g;
}

Vector segment_pressure(const Vector& lambda, const Groups& groups) {
  Vector out(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) throw DomainError("segment_pressure: empty group");
    double s = 0.0;
    for (int j : groups[i]) {
      if (j < 0 || j >= lambda.size()) throw DimensionError("segment_pressure: row out of range");
      s += lambda(j);
    }
    out(i) = s / static_cast<double>(groups[i].size());
  }
  return out;
}

Matrix averaging_matrix(const Groups& groups, int m, int offset) {
  Matrix A = Matrix::Zero(static_cast<Eigen::Index>(groups.size()), m);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) throw DomainError("averaging_matrix: empty group");
    for (int j : groups[i]) A(i, offset + j) += 1.0 / static_cast<double>(groups[i].size());
  }
  return A;
}

double p_norm(const Vector& v, double p) {
  const double vmax = v.cwiseAbs().maxCoeff();
  if (!(vmax > 0.0)) return 0.0;
  // Scale by the max to avoid overflow for large p.
  return vmax * std::pow((v.cwiseAbs() / vmax).array().pow(p).sum(), 1.0 / p);
}

Vector p_norm_gradient(const Vector& v, double p) {
  const double n = p_norm(v, p);
  if (!(n > 0.0)) return Vector::Zero(v.size());
  Vector g(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    g(i) = std::pow(std::abs(v(i)) / n, p - 1.0) * (v(i) < 0.0 ? -1.0 : 1.0);
  return g;
}

// ---------------------------------------------------------------------------

bayesopt::CboEvaluation Scenario::evaluate_cbo(const Vector& rho) const {
  const auto e = evaluate(rho, false);
  return {e.a, e.c};
}

void Scenario::write_profile_header(std::ostream& os) {
  os << "snapshot,surface,row,node,x,y,multiplier,nodal_pressure,segment,segment_pressure\n";
}

void Scenario::write_profile(const Vector&, std::ostream& os) const { write_profile_header(os); }

nlpopt::NlpProblem Scenario::nlp_problem() const {
  nlpopt::NlpProblem prob;
  prob.p = p();
  prob.q = q();
  prob.lower = lower();
  prob.upper = upper();
  prob.eval = [this](const Vector& rho) { return evaluate(rho, true); };
  return prob;
}

bayesopt::CboProblem Scenario::cbo_problem() const {
  bayesopt::CboProblem prob;
  prob.p = p();
  prob.q = q();
  prob.lower = lower();
  prob.upper = upper();
  prob.eval = [this](const Vector& rho) { return evaluate_cbo(rho); };
  return prob;
}

// ---------------------------------------------------------------------------
// Wedge

namespace {

struct WedgeModel {
  geometry::Mesh mesh;
  elasticity::SystemMatrices sys;  // f_ext is snapshot 1
  Vector f2;
  mortar::MortarData md;
};

WedgeModel build_wedge(const Vector& rho, const WedgeParams& prm, bool factorize) {
  if (rho.size() != 3) throw DimensionError("wedge: design must have 3 entries");
  WedgeModel m;
  m.mesh = geometry::build_wedge_mesh(rho(0), rho(1), prm.geometry);
  elasticity::BoundaryConditions bc;
  bc.springs.push_back({"support", 0, prm.support_stiffness});
  elasticity::LoadCase s1;
  s1.tractions.push_back({"p1_face", rho(2)});
  elasticity::LoadCase s2 = s1;
  s2.tractions.push_back({"p2_face", prm.p2});
  m.sys = elasticity::assemble(m.mesh, {prm.material}, bc, s1, factorize);
  m.f2 = elasticity::assemble_load(m.mesh, m.sys.dof_map, s2);
  m.md = mortar::build_mortar(m.mesh, {"wedge"}, m.sys.dof_map);
  return m;
}

struct WedgeState {
  WedgeModel model;
  std::vector<forward::ForwardProblem> problems;
  std::vector<forward::ForwardSolution> solutions;
};

WedgeState solve_wedge(const Vector& rho, const WedgeParams& prm) {
  WedgeState st;
  st.model = build_wedge(rho, prm, true);
  for (int s = 0; s < 2; ++s) {
    forward::ForwardProblem fp = forward::make_problem(st.model.sys, st.model.md);
    if (s == 1) fp.f_ext = st.model.f2;
    st.solutions.push_back(forward::solve_forward(fp));
    st.problems.push_back(std::move(fp));
  }
  return st;
}

std::vector<int> active_rows(const Vector& lambda) {
  std::vector<int> a;
  const double scale = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) > 1e-7 * scale) a.push_back(static_cast<int>(i));
  return a;
}

}  // namespace

WedgeScenario::WedgeScenario(WedgeParams params) : params_(std::move(params)) {
  if (params_.p1_min > params_.p1_max) throw DomainError("wedge: empty P1 range");
  const geometry::Mesh mesh =
      geometry::build_wedge_mesh(params_.initial(0), params_.initial(1), params_.geometry);
  const auto& chain = mesh.contact_pair("wedge").mortar;
  segments_ = shared_endpoint_groups(static_cast<int>(chain.size()), 3);
  const int nseg = static_cast<int>(segments_.size());
  if (params_.n_lower_segments < 0 || params_.n_lower_segments > nseg) {
    throw DomainError("wedge: n_lower_segments out of range");
  }
  // Topology does not depend on the design, so the top segments found here
  // stay the top segments everywhere.
  std::vector<int> order(nseg);
  for (int i = 0; i < nseg; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mesh.coords[chain[segments_[a][1]]].y() > mesh.coords[chain[segments_[b][1]]].y();
  });
  lower_segments_.assign(order.begin(), order.begin() + params_.n_lower_segments);
  std::sort(lower_segments_.begin(), lower_segments_.end());
}

int WedgeScenario::q() const {
  return 2 * (static_cast<int>(lower_segments_.size()) + static_cast<int>(segments_.size()));
}

Vector WedgeScenario::lower() const {
  return Eigen::Vector3d(params_.geometry.theta_min, params_.geometry.theta_min, params_.p1_min);
}

Vector WedgeScenario::upper() const {
  return Eigen::Vector3d(params_.geometry.theta_max, params_.geometry.theta_max, params_.p1_max);
}

std::vector<Vector> WedgeScenario::segment_pressures(const Vector& rho) const {
  const WedgeState st = solve_wedge(rho, params_);
  std::vector<Vector> out;
  for (const auto& sol : st.solutions) out.push_back(segment_pressure(sol.lambda, segments_));
  return out;
}

nlpopt::Evaluation WedgeScenario::evaluate(const Vector& rho, bool gradients) const {
  const WedgeState st = solve_wedge(rho, params_);
  const int m = st.model.md.rows();
  const int nl = static_cast<int>(lower_segments_.size());
  const int ns = static_cast<int>(segments_.size());
  const Matrix A = averaging_matrix(segments_, m);
  const Matrix A_low = A(lower_segments_, Eigen::all);

  nlpopt::Evaluation ev;
  ev.a = rho(2);
  ev.c.resize(q());
  for (int s = 0; s < 2; ++s) {
    const Vector seg = A * st.solutions[s].lambda;
    const int off = s * (nl + ns);
    for (int i = 0; i < nl; ++i) ev.c(off + i) = seg(lower_segments_[i]) - params_.lambda_lower;
    for (int i = 0; i < ns; ++i) ev.c(off + nl + i) = params_.lambda_upper - seg(i);
  }
  if (!gradients) return ev;

  ev.grad_a = Eigen::Vector3d(0.0, 0.0, 1.0);
  const sensitivity::ModelBuilder builder = [this](const Eigen::VectorXd& r) {
    WedgeModel mm = build_wedge(r, params_, false);
    return sensitivity::AssembledModel{std::move(mm.sys.K), {mm.sys.f_ext, mm.f2},
                                       std::move(mm.md.G), std::move(mm.md.g0)};
  };
  const auto derivs = sensitivity::design_derivatives(
      builder, rho, {st.solutions[0].u, st.solutions[1].u},
      {st.solutions[0].lambda, st.solutions[1].lambda});
  ev.jac_c.resize(q(), 3);
  for (int s = 0; s < 2; ++s) {
    const auto sens = sensitivity::solve_sensitivity(st.problems[s], st.solutions[s], derivs[s]);
    const int off = s * (nl + ns);
    ev.jac_c.middleRows(off, nl) = A_low * sens.dlambda_drho;
    ev.jac_c.middleRows(off + nl, ns) = -A * sens.dlambda_drho;
  }
  return ev;
}

std::vector<std::vector<int>> WedgeScenario::active_sets(const Vector& rho) const {
  const WedgeState st = solve_wedge(rho, params_);
  return {active_rows(st.solutions[0].lambda), active_rows(st.solutions[1].lambda)};
}

void WedgeScenario::write_profile(const Vector& rho, std::ostream& os) const {
  write_profile_header(os);
  const WedgeState st = solve_wedge(rho, params_);
  const auto& pr = st.model.md.pair("wedge");
  const int ns = static_cast<int>(segments_.size());
  os.precision(17);
  for (int s = 0; s < 2; ++s) {
    const Vector& lam = st.solutions[s].lambda;
    const Vector np = mortar::nodal_pressure(st.model.md, lam);
    const Vector seg = segment_pressure(lam, segments_);
    for (int j = 0; j < pr.n_rows(); ++j) {
      const int row = pr.offset + j;
      const int node = pr.mortar_nodes[j];
      const int sg = std::min(j / 2, ns - 1);
      os << s + 1 << ",wedge," << j << ',' << node << ',' << st.model.mesh.coords[node].x() << ','
         << st.model.mesh.coords[node].y() << ',' << lam(row) << ',' << np(row) << ',' << sg << ','
         << seg(sg) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Clamp-lite

namespace {

struct ClampModel {
  geometry::Mesh mesh;
  elasticity::SystemMatrices sys;
  mortar::MortarData md;
};

ClampModel build_clamp(const Vector& rho, const ClampLiteParams& prm, bool factorize) {
  if (rho.size() != 4) throw DimensionError("clamp-lite: design must have 4 entries");
  ClampModel m;
  m.mesh = geometry::build_clamp_lite_mesh(Eigen::Vector4d(rho), prm.geometry);
  elasticity::BoundaryConditions bc;
  bc.springs.push_back({"band", 1, prm.band_stiffness});
  m.sys = elasticity::assemble(m.mesh, {prm.material}, bc, {}, factorize);
  m.md = mortar::build_mortar(m.mesh, {"interface", "seal"}, m.sys.dof_map);
  return m;
}

// Element pressures: mean of the two end multipliers of each interface element.
Groups element_groups(int n_rows) { return shared_endpoint_groups(n_rows, 2); }

}  // namespace

ClampLiteScenario::ClampLiteScenario(ClampLiteParams params) : params_(std::move(params)) {
  if (params_.p_norm < 1.0) throw DomainError("clamp-lite: p-norm exponent must be >= 1");
  const geometry::Mesh mesh = geometry::build_clamp_lite_mesh(
      params_.initial.cwiseMax(Eigen::Vector4d(params_.geometry.lower.data()))
          .cwiseMin(Eigen::Vector4d(params_.geometry.upper.data())),
      params_.geometry);
  n_interface_rows_ = static_cast<int>(mesh.contact_pair("interface").mortar.size());
  const int n_seal = static_cast<int>(mesh.contact_pair("seal").mortar.size());
  if (params_.n_seal_nodes < 1 || params_.n_seal_nodes > n_seal) {
    throw DomainError("clamp-lite: n_seal_nodes out of range");
  }
}

int ClampLiteScenario::q() const { return 1 + (n_interface_rows_ - 1) + 1; }

Vector ClampLiteScenario::lower() const { return Eigen::Vector4d(params_.geometry.lower.data()); }

Vector ClampLiteScenario::upper() const { return Eigen::Vector4d(params_.geometry.upper.data()); }

nlpopt::Evaluation ClampLiteScenario::evaluate(const Vector& rho, bool gradients) const {
  return evaluate(rho, gradients, params_.gradient_aggregation);
}

bayesopt::CboEvaluation ClampLiteScenario::evaluate_cbo(const Vector& rho) const {
  const auto e = evaluate(rho, false, Aggregation::ExactMax);
  return {e.a, e.c};
}

nlpopt::Evaluation ClampLiteScenario::evaluate(const Vector& rho, bool gradients,
                                               Aggregation agg) const {
  const ClampModel cm = build_clamp(rho, params_, true);
  const forward::ForwardProblem fp = forward::make_problem(cm.sys, cm.md);
  const forward::ForwardSolution sol = forward::solve_forward(fp);
  const int m = cm.md.rows();
  const auto& ip = cm.md.pair("interface");
  const auto& sp = cm.md.pair("seal");
  const Matrix A = averaging_matrix(element_groups(ip.n_rows()), m, ip.offset);
  const int ne = static_cast<int>(A.rows());
  const Vector e = A * sol.lambda;

  nlpopt::Evaluation ev;
  ev.a = elasticity::compliance(cm.sys.K, sol.u);
  ev.c.resize(q());
  Vector seal_row = Vector::Zero(m);
  seal_row.segment(sp.offset, params_.n_seal_nodes).setOnes();
  ev.c(0) = seal_row.dot(sol.lambda) - params_.seal_min;
  ev.c.segment(1, ne) = (params_.element_upper - e.array()).matrix();
  Vector agg_grad = Vector::Zero(ne);
  if (agg == Aggregation::ExactMax) {
    Eigen::Index k = 0;
    ev.c(1 + ne) = e.maxCoeff(&k) - params_.element_lower;
    agg_grad(k) = 1.0;
  } else {
    ev.c(1 + ne) = p_norm(e, params_.p_norm) - params_.element_lower;
    agg_grad = p_norm_gradient(e, params_.p_norm);
  }
  if (!gradients) return ev;

  const sensitivity::ModelBuilder builder = [this](const Eigen::VectorXd& r) {
    ClampModel mm = build_clamp(r, params_, false);
    return sensitivity::AssembledModel{std::move(mm.sys.K), {mm.sys.f_ext}, std::move(mm.md.G),
                                       std::move(mm.md.g0)};
  };
  const auto derivs = sensitivity::design_derivatives(builder, rho, {sol.u}, {sol.lambda});
  const auto sens = sensitivity::solve_sensitivity(fp, sol, derivs[0]);

  // a = u^T K u: explicit part u^T (dK) u, implicit part 2 (K u)^T du.
  ev.grad_a = (derivs[0].dK_u.transpose() * sol.u + 2.0 * sens.du_drho.transpose() * (cm.sys.K * sol.u));
  const Matrix dl = sens.dlambda_drho;
  const Matrix de = A * dl;
  ev.jac_c.resize(q(), 4);
  ev.jac_c.row(0) = seal_row.transpose() * dl;
  ev.jac_c.middleRows(1, ne) = -de;
  ev.jac_c.row(1 + ne) = agg_grad.transpose() * de;
  return ev;
}

std::vector<std::vector<int>> ClampLiteScenario::active_sets(const Vector& rho) const {
  const ClampModel cm = build_clamp(rho, params_, true);
  return {active_rows(forward::solve_forward(forward::make_problem(cm.sys, cm.md)).lambda)};
}

void ClampLiteScenario::write_profile(const Vector& rho, std::ostream& os) const {
  write_profile_header(os);
  const ClampModel cm = build_clamp(rho, params_, true);
  const forward::ForwardSolution sol = forward::solve_forward(forward::make_problem(cm.sys, cm.md));
  const Vector np = mortar::nodal_pressure(cm.md, sol.lambda);
  os.precision(17);
  {
    const auto& pr = cm.md.pair("interface");
    const Groups g = element_groups(pr.n_rows());
    const Vector e = segment_pressure(sol.lambda.segment(pr.offset, pr.n_rows()), g);
    const int ne = static_cast<int>(g.size());
    for (int j = 0; j < pr.n_rows(); ++j) {
      const int node = pr.mortar_nodes[j];
      const int sg = std::min(j, ne - 1);
      os << "1,interface," << j << ',' << node << ',' << cm.mesh.coords[node].x() << ','
         << cm.mesh.coords[node].y() << ',' << sol.lambda(pr.offset + j) << ',' << np(pr.offset + j)
         << ',' << sg << ',' << e(sg) << '\n';
    }
  }
  {
    // Segment 0 of the seal surface is the designated seal group (its sum).
    const auto& pr = cm.md.pair("seal");
    const double seal = sol.lambda.segment(pr.offset, params_.n_seal_nodes).sum();
    for (int j = 0; j < pr.n_rows(); ++j) {
      const int node = pr.mortar_nodes[j];
      os << "1,seal," << j << ',' << node << ',' << cm.mesh.coords[node].x() << ','
         << cm.mesh.coords[node].y() << ',' << sol.lambda(pr.offset + j) << ',' << np(pr.offset + j);
      if (j < params_.n_seal_nodes) {
        os << ",0," << seal << '\n';
      } else {
        os << ",-1,nan\n";
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Analytic

AnalyticScenario::AnalyticScenario(std::string name) : name_(std::move(name)) {
  if (name_ == "quadratic") {
    p_ = 1;
    lower_ = Vector::Constant(1, 0.0);
    upper_ = Vector::Constant(1, 5.0);
    initial_ = Vector::Constant(1, 4.0);
    optimum_ = Vector::Constant(1, 2.0);
  } else if (name_ == "circle") {
    p_ = 2;
    lower_ = Vector::Constant(2, -2.0);
    upper_ = Vector::Constant(2, 2.0);
    initial_ = Vector::Zero(2);
    optimum_ = Vector::Constant(2, -std::sqrt(0.5));
  } else if (name_ == "quadratic-1d") {
    p_ = 1;
    lower_ = Vector::Constant(1, 0.0);
    upper_ = Vector::Constant(1, 1.0);
    initial_ = Vector::Constant(1, 0.9);
    optimum_ = Vector::Constant(1, 0.5);
  } else {
    throw DomainError("unknown analytic scenario '" + name_ + "'");
  }
}

nlpopt::Evaluation AnalyticScenario::evaluate(const Vector& rho, bool gradients) const {
  if (rho.size() != p_) throw DimensionError("analytic scenario: wrong design size");
  nlpopt::Evaluation ev;
  ev.c.resize(1);
  ev.grad_a.resize(p_);
  ev.jac_c.resize(1, p_);
  if (name_ == "circle") {
    ev.a = rho.sum();
    ev.c(0) = 1.0 - rho.squaredNorm();
    ev.grad_a.setOnes();
    ev.jac_c.row(0) = -2.0 * rho.transpose();
  } else {
    const double target = name_ == "quadratic" ? 1.0 : 0.3;
    const double bound = name_ == "quadratic" ? 2.0 : 0.5;
    ev.a = (rho(0) - target) * (rho(0) - target);
    ev.c(0) = rho(0) - bound;
    ev.grad_a(0) = 2.0 * (rho(0) - target);
    ev.jac_c(0, 0) = 1.0;
  }
  if (!gradients) {
    ev.grad_a.resize(0);
    ev.jac_c.resize(0, 0);
  }
  return ev;
}

std::vector<std::string> scenario_ids() {
  return {"wedge", "clamp-lite", "quadratic", "circle", "quadratic-1d"};
}

}  // namespace contactopt::scenarios
