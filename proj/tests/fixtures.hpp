#pragma once

// Forward problems shared by several test programs.

#include <vector>

#include "contactopt/forward.hpp"
#include "contactopt/scenarios.hpp"

namespace fixtures {

using contactopt::linalg::Matrix;
using contactopt::linalg::Vector;
namespace co = contactopt;

/// 1-dof spring of stiffness k pushed by f towards a wall at distance d:
/// g = d - u.
inline co::forward::ForwardProblem spring_wall(double k, double f, double d) {
  co::forward::ForwardProblem p;
  p.K = Matrix::Constant(1, 1, k);
  p.f_ext = Vector::Constant(1, f);
  p.G = Matrix::Constant(1, 1, -1.0);
  p.g0 = Vector::Constant(1, d);
  return p;
}

/// Wedge contact problems of both snapshots, assembled like the scenario does.
inline std::vector<co::forward::ForwardProblem> wedge_problems(
    const Eigen::Vector3d& rho, const co::scenarios::WedgeParams& prm = {}) {
  const auto mesh = co::geometry::build_wedge_mesh(rho(0), rho(1), prm.geometry);
  co::elasticity::BoundaryConditions bc;
  bc.springs.push_back({"support", 0, prm.support_stiffness});
  co::elasticity::LoadCase s1;
  s1.tractions.push_back({"p1_face", rho(2)});
  co::elasticity::LoadCase s2 = s1;
  s2.tractions.push_back({"p2_face", prm.p2});
  const auto sys = co::elasticity::assemble(mesh, {prm.material}, bc, s1);
  const auto md = co::mortar::build_mortar(mesh, {"wedge"}, sys.dof_map);
  auto p1 = co::forward::make_problem(sys, md);
  auto p2 = p1;
  p2.f_ext = co::elasticity::assemble_load(mesh, sys.dof_map, s2);
  return {p1, p2};
}

/// Clamp-lite contact problem (interference loaded).
inline co::forward::ForwardProblem clamp_problem(const Eigen::Vector4d& rho,
                                                 const co::scenarios::ClampLiteParams& prm = {}) {
  const auto mesh = co::geometry::build_clamp_lite_mesh(rho, prm.geometry);
  co::elasticity::BoundaryConditions bc;
  bc.springs.push_back({"band", 1, prm.band_stiffness});
  const auto sys = co::elasticity::assemble(mesh, {prm.material}, bc, {});
  const auto md = co::mortar::build_mortar(mesh, {"interface", "seal"}, sys.dof_map);
  return co::forward::make_problem(sys, md);
}

}  // namespace fixtures
