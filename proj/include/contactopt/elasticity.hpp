#pragma once

// Plane-strain bilinear-quad elasticity: stiffness, consistent traction loads,
// elastic supports, Dirichlet elimination and the energy functionals.

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contactopt/geometry.hpp"
#include "contactopt/linalg.hpp"

namespace contactopt::elasticity {

using linalg::Matrix;
using linalg::Vector;

struct Material {
  double E = 1.0;
  double nu = 0.3;

  /// Throws DomainError unless E > 0 and -1 < nu < 0.5.
  void validate() const;
  /// Plane-strain constitutive matrix acting on (exx, eyy, gxy).
  Eigen::Matrix3d plane_strain() const;
};

/// Uniform normal pressure on an edge set; positive pushes into the body.
struct Traction {
  std::string edge_set;
  double pressure = 0.0;
};

/// Distributed elastic support along an edge set (stiffness per unit length)
/// acting on displacement component `direction` (0 = x, 1 = y).
struct Spring {
  std::string edge_set;
  int direction = 0;
  double stiffness = 0.0;
};

struct BoundaryConditions {
  std::vector<std::string> fix_x{"dirichlet_x"};
  std::vector<std::string> fix_y{"dirichlet_y"};
  std::vector<Spring> springs;
};

struct LoadCase {
  std::vector<Traction> tractions;
};

/// Map between full nodal dofs (2 per node, x then y) and free dofs.
struct DofMap {
  std::vector<int> full_to_free;  // -1 for Dirichlet dofs
  std::vector<int> free_to_full;

  int n_full() const { return static_cast<int>(full_to_free.size()); }
  int n_free() const { return static_cast<int>(free_to_full.size()); }
  Vector restrict_vector(const Vector& full) const;
  /// Free vector scattered into a full vector, zeros on Dirichlet dofs.
  Vector expand(const Vector& free) const;
  bool operator==(const DofMap&) const = default;
};

DofMap make_dof_map(const geometry::Mesh& mesh, const BoundaryConditions& bc);

struct SystemMatrices {
  Matrix K;        // free x free
  Vector f_ext;    // free
  DofMap dof_map;
  /// Cholesky factor of K; null when assembled with factorize = false.
  std::shared_ptr<const linalg::Cholesky> factor;
};

/// Element stiffness of one quad (8 x 8, dofs ordered node-major).
Eigen::Matrix<double, 8, 8> element_stiffness(const geometry::Mesh& mesh, int element,
                                              const Material& material);

/// Unconstrained stiffness over all nodal dofs, springs included.
Matrix assemble_full_stiffness(const geometry::Mesh& mesh, const std::vector<Material>& materials,
                               const std::vector<Spring>& springs = {});

/// Consistent nodal force vector over all nodal dofs.
Vector assemble_full_load(const geometry::Mesh& mesh, const LoadCase& loads);

/// K and f_ext on the free dofs. `materials` holds one entry per body (a single
/// entry applies to all bodies). With `factorize`, K is Cholesky-factored and
/// an AssemblyError is raised if it is singular on the free dofs.
SystemMatrices assemble(const geometry::Mesh& mesh, const std::vector<Material>& materials,
                        const BoundaryConditions& bc, const LoadCase& loads,
                        bool factorize = true);

/// Free-dof load vector for an additional load case on the same mesh.
Vector assemble_load(const geometry::Mesh& mesh, const DofMap& dofs, const LoadCase& loads);

/// 1/2 u^T K u - f^T u
double energy(const Matrix& K, const Vector& f_ext, const Vector& u);

/// u^T K u
double compliance(const Matrix& K, const Vector& u);

/// Cauchy stress (sxx, syy, sxy) at local point (xi, eta) of an element, from
/// a full displacement vector.
Eigen::Vector3d element_stress(const geometry::Mesh& mesh, int element, const Material& material,
                               const Vector& u_full, double xi, double eta);

}  // namespace contactopt::elasticity
