#pragma once

// 2D mortar gap for frictionless contact with linear kinematics: rows are the
// mortar-side (side 2) nodes, g_j(u) = int Phi_j n2.(x1 - x2) = g0_j + G_j u.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contactopt/elasticity.hpp"
#include "contactopt/geometry.hpp"

namespace contactopt::mortar {

using linalg::Matrix;
using linalg::Vector;

struct PairRows {
  std::string name;
  int offset = 0;  // first row of this pair in the stacked data
  std::vector<int> mortar_nodes;
  std::vector<int> nonmortar_nodes;
  std::vector<geometry::Vec2> normals;  // outward unit normal per mortar segment (reference)
  int n_rows() const { return static_cast<int>(mortar_nodes.size()); }
};

struct MortarData {
  Matrix G;        // m x n (columns follow the dof map used at build time)
  Vector g0;       // m
  Vector weights;  // m, int Phi_j over the overlapping part of the mortar chain
  Matrix mass;     // m x m, int Phi_j Phi_k over the overlap
  std::vector<PairRows> pairs;

  int rows() const { return static_cast<int>(g0.size()); }
  const PairRows& pair(const std::string& name) const;
};

/// Stacks the rows of the named contact pairs. Columns of G index the free
/// dofs of `dofs`; Dirichlet dofs contribute nothing because they stay at zero.
MortarData build_mortar(const geometry::Mesh& mesh, const std::vector<std::string>& pair_names,
                        const elasticity::DofMap& dofs);

/// Same with every nodal dof free.
MortarData build_mortar(const geometry::Mesh& mesh, const std::vector<std::string>& pair_names);

/// g0 + G u
Vector gap(const MortarData& md, const Vector& u);

/// Consistent nodal contact force per unit weight, (M lambda)_j / w_j; rows
/// with zero weight report 0. With the multipliers acting as nodal values of
/// the pressure field, a uniform field lambda = p gives p everywhere.
Vector nodal_pressure(const MortarData& md, const Vector& lambda);

using MortarBuilder = std::function<MortarData(const Eigen::VectorXd&)>;

struct MortarDesignDerivs {
  Matrix dg0;         // m x p
  Matrix dGt_lambda;  // n x p, d(G^T lambda)/d rho at fixed lambda
  Matrix dG_u;        // m x p, (dG/d rho) u at fixed u
};

/// Central differences of g0, G^T lambda and G u holding u and lambda fixed,
/// with step rel_step * (1 + |rho_i|).
MortarDesignDerivs mortar_design_derivs(const MortarBuilder& builder, const Eigen::VectorXd& rho,
                                        const Vector& u, const Vector& lambda,
                                        double rel_step = 1e-6);

}  // namespace contactopt::mortar
