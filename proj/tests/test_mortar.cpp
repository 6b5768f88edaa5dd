#include "doctest.h"

#include <cmath>
#include <random>

#include "contactopt/forward.hpp"
#include "contactopt/mortar.hpp"

using namespace contactopt;
using namespace contactopt::mortar;
using geometry::Mesh;
using geometry::StackedBlocks;

namespace {

// Hat-function integrals of a uniform chain of n segments over [0, width].
Vector hat_weights(int n, double width) {
  Vector w = Vector::Constant(n + 1, width / n);
  w(0) *= 0.5;
  w(n) *= 0.5;
  return w;
}

StackedBlocks matching(double gap) {
  StackedBlocks s;
  s.gap = gap;
  s.lower_along = s.upper_along = 6;
  return s;
}

// Upper block pressed onto the lower block by uniform pressure p on its top.
// The upper block is held in y only by contact and by a soft uniform support
// on its top; the support takes the uniform share ks |u_top| of the load, so
// the interface pressure stays uniform at p - ks |u_top|.
struct PatchResult {
  MortarData md;
  forward::ForwardSolution sol;
  double expected = 0;
};

PatchResult solve_patch(int lower_along, int upper_along, double p) {
  StackedBlocks s;
  s.lower_along = lower_along;
  s.upper_along = upper_along;
  const Mesh mesh = geometry::build_stacked_blocks(s);
  const double ks = 1e-3;
  elasticity::BoundaryConditions bc;
  bc.springs.push_back({"top", 1, ks});
  elasticity::LoadCase loads;
  loads.tractions.push_back({"top", p});
  const auto sys = elasticity::assemble(mesh, {{100.0, 0.3}}, bc, loads);
  auto md = build_mortar(mesh, {"interface"}, sys.dof_map);
  auto sol = forward::solve_forward(forward::make_problem(sys, md));
  const int corner = mesh.edge_set("top").front()[0];
  const double u_top = sys.dof_map.expand(sol.u)(2 * corner + 1);
  return {std::move(md), std::move(sol), p + ks * u_top};
}

}  // namespace

TEST_CASE("coincident chains have zero reference gap") {
  const Mesh m = geometry::build_stacked_blocks(matching(0.0));
  const MortarData md = build_mortar(m, {"interface"});
  CHECK(md.rows() == 7);
  CHECK(md.g0.cwiseAbs().maxCoeff() < 1e-15);
  CHECK((md.weights - hat_weights(6, 1.0)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((gap(md, Vector::Zero(m.n_dofs())) - md.g0).norm() == 0.0);
}

TEST_CASE("separated and overlapping chains") {
  for (double delta : {0.05, -0.05}) {
    const MortarData md = build_mortar(geometry::build_stacked_blocks(matching(delta)), {"interface"});
    CHECK((md.g0 - delta * hat_weights(6, 1.0)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("rigid translations of side 1") {
  StackedBlocks s;
  s.gap = 0.02;
  const Mesh m = geometry::build_stacked_blocks(s);
  const MortarData md = build_mortar(m, {"interface"});
  const auto& upper_chain = m.contact_pair("interface").nonmortar;
  // Nodes of the upper block are those with y >= gap.
  Vector down = Vector::Zero(m.n_dofs()), side = Vector::Zero(m.n_dofs());
  for (int n = 0; n < m.n_nodes(); ++n) {
    if (m.coords[n].y() >= s.gap - 1e-12) {
      down(2 * n + 1) = -0.01;
      side(2 * n) = 0.013;
    }
  }
  CHECK(upper_chain.size() == 8);
  CHECK((gap(md, down) - (md.g0 - 0.01 * md.weights)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((gap(md, side) - md.g0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("G matches finite differences of the reference gap") {
  StackedBlocks s;
  s.gap = 0.01;
  const Mesh base = geometry::build_stacked_blocks(s);
  const MortarData md = build_mortar(base, {"interface"});
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  Vector dir(base.n_dofs());
  // Random normal moves of side 1 and a rigid normal move of side 2 keep the
  // projection pattern and the normals fixed, so the gap is exactly linear.
  const double shift = n01(rng);
  for (int n = 0; n < base.n_nodes(); ++n) {
    dir(2 * n) = 0;
    dir(2 * n + 1) = base.coords[n].y() > 0.005 ? n01(rng) : shift;
  }
  const double h = 1e-4;
  Mesh mp = base, mm = base;
  for (int n = 0; n < base.n_nodes(); ++n) {
    mp.coords[n] += h * geometry::Vec2(dir(2 * n), dir(2 * n + 1));
    mm.coords[n] -= h * geometry::Vec2(dir(2 * n), dir(2 * n + 1));
  }
  const Vector fd = (build_mortar(mp, {"interface"}).g0 - build_mortar(mm, {"interface"}).g0) / (2 * h);
  CHECK((fd - md.G * dir).cwiseAbs().maxCoeff() <= 1e-9 * dir.cwiseAbs().maxCoeff());
}

TEST_CASE("nodal pressure") {
  const MortarData md = build_mortar(geometry::build_stacked_blocks(matching(0.0)), {"interface"});
  CHECK(nodal_pressure(md, Vector::Zero(md.rows())).norm() == 0.0);
  const Vector p = nodal_pressure(md, Vector::Constant(md.rows(), 2.5));
  CHECK((p.array() - 2.5).abs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(nodal_pressure(md, Vector::Zero(3)), DimensionError);
}

TEST_CASE("patch test across non-matching meshes") {
  for (auto [lo, up] : {std::pair{5, 7}, std::pair{7, 5}, std::pair{6, 6}}) {
    const double p = 3.0;
    const auto r = solve_patch(lo, up, p);
    const Vector pn = nodal_pressure(r.md, r.sol.lambda);
    CHECK(r.expected < p);
    CHECK(r.expected > (1 - 1e-3) * p);
    for (int j = 0; j < r.md.rows(); ++j) CHECK(std::abs(pn(j) - r.expected) <= 1e-8 * p);
    CHECK(r.sol.kkt.max_scaled() <= 1e-9);
  }
}

TEST_CASE("mortar design derivatives") {
  const Mesh m0 = geometry::build_stacked_blocks(matching(0.0));
  const Vector u = Vector::Zero(m0.n_dofs());
  const Vector lam = Vector::Ones(7);

  SUBCASE("gap design variable") {
    const MortarBuilder b = [](const Eigen::VectorXd& r) {
      return build_mortar(geometry::build_stacked_blocks(matching(r(0))), {"interface"});
    };
    const auto d = mortar_design_derivs(b, Eigen::VectorXd::Constant(1, 0.03), u, lam);
    CHECK((d.dg0.col(0) - hat_weights(6, 1.0)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(d.dGt_lambda.cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("upper height only moves non-contact nodes") {
    const MortarBuilder b = [](const Eigen::VectorXd& r) {
      StackedBlocks s = matching(0.0);
      s.upper_height = r(0);
      return build_mortar(geometry::build_stacked_blocks(s), {"interface"});
    };
    Vector u1 = Vector::LinSpaced(m0.n_dofs(), -1, 1);
    const auto d = mortar_design_derivs(b, Eigen::VectorXd::Constant(1, 0.5), u1, lam);
    CHECK(d.dg0.norm() == 0.0);
    CHECK(d.dGt_lambda.norm() == 0.0);
    CHECK(d.dG_u.norm() == 0.0);
  }
  SUBCASE("step halving") {
    // Tilted interface: the side-1 chain rotates with rho.
    const MortarBuilder b = [](const Eigen::VectorXd& r) {
      Mesh m = geometry::build_stacked_blocks(matching(0.05));
      for (auto& x : m.coords)
        if (x.y() > 0.01) x.y() += std::sin(r(0)) * x.x() * x.x();
      return build_mortar(m, {"interface"});
    };
    const Eigen::VectorXd r0 = Eigen::VectorXd::Constant(1, 0.02);
    // Exact: dg0_j/drho = cos(rho) int Phi_j x^2.
    const MortarData md = b(r0);
    const auto d1 = mortar_design_derivs(b, r0, u, lam, 4e-2);
    const auto d2 = mortar_design_derivs(b, r0, u, lam, 2e-2);
    const auto d3 = mortar_design_derivs(b, r0, u, lam, 1e-6);
    const double e1 = (d1.dg0 - d3.dg0).norm(), e2 = (d2.dg0 - d3.dg0).norm();
    CHECK(e1 > 0);
    CHECK(e2 / e1 == doctest::Approx(0.25).epsilon(0.05));
    CHECK(md.rows() == 7);
  }
}
