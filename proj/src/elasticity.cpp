#include "contactopt/elasticity.hpp"

#include <cmath>
#include <set>

namespace contactopt::elasticity {

using geometry::Mesh;

void Material::validate() const {
  if (!(E > 0.0)) throw DomainError("material: E must be positive");
  if (!(nu > -1.0 && nu < 0.5)) throw DomainError("material: nu must lie in (-1, 0.5)");
}

Eigen::Matrix3d Material::plane_strain() const {
  validate();
  const double c = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
  Eigen::Matrix3d d;
  d << 1.0 - nu, nu, 0.0,
       nu, 1.0 - nu, 0.0,
       0.0, 0.0, 0.5 - nu;
  return c * d;
}

Vector DofMap::restrict_vector(const Vector& full) const {
  if (full.size() != n_full()) throw DimensionError("dof map: full vector size mismatch");
  Vector out(n_free());
  for (int i = 0; i < n_free(); ++i) out(i) = full(free_to_full[i]);
  return out;
}

Vector DofMap::expand(const Vector& free) const {
  if (free.size() != n_free()) throw DimensionError("dof map: free vector size mismatch");
  Vector out = Vector::Zero(n_full());
  for (int i = 0; i < n_free(); ++i) out(free_to_full[i]) = free(i);
  return out;
}

DofMap make_dof_map(const Mesh& mesh, const BoundaryConditions& bc) {
  std::set<int> fixed;
  for (const auto& name : bc.fix_x)
    for (int n : mesh.node_set(name)) fixed.insert(2 * n);
  for (const auto& name : bc.fix_y)
    for (int n : mesh.node_set(name)) fixed.insert(2 * n + 1);
  DofMap map;
  map.full_to_free.assign(mesh.n_dofs(), -1);
  for (int d = 0; d < mesh.n_dofs(); ++d) {
    if (fixed.count(d)) continue;
    map.full_to_free[d] = map.n_free();
    map.free_to_full.push_back(d);
  }
  return map;
}

namespace {

constexpr double kGauss = 0.57735026918962576;

struct ShapeDerivs {
  Eigen::Matrix<double, 3, 8> B;
  double detJ;
};

ShapeDerivs shape_derivatives(const Mesh& mesh, int element, double xi, double eta) {
  const auto& q = mesh.quads[element];
  const double dxi[4] = {-(1 - eta) / 4, (1 - eta) / 4, (1 + eta) / 4, -(1 + eta) / 4};
  const double deta[4] = {-(1 - xi) / 4, -(1 + xi) / 4, (1 + xi) / 4, (1 - xi) / 4};
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
  for (int a = 0; a < 4; ++a) {
    const auto& p = mesh.coords[q[a]];
    J(0, 0) += dxi[a] * p.x();
    J(0, 1) += dxi[a] * p.y();
    J(1, 0) += deta[a] * p.x();
    J(1, 1) += deta[a] * p.y();
  }
  ShapeDerivs out;
  out.detJ = J.determinant();
  if (!(out.detJ > 0.0)) {
    throw MeshQualityError("elasticity: element " + std::to_string(element) +
                           " has a non-positive Jacobian");
  }
  const Eigen::Matrix2d Jinv = J.inverse();
  out.B.setZero();
  for (int a = 0; a < 4; ++a) {
    const double dx = Jinv(0, 0) * dxi[a] + Jinv(0, 1) * deta[a];
    const double dy = Jinv(1, 0) * dxi[a] + Jinv(1, 1) * deta[a];
    out.B(0, 2 * a) = dx;
    out.B(1, 2 * a + 1) = dy;
    out.B(2, 2 * a) = dy;
    out.B(2, 2 * a + 1) = dx;
  }
  return out;
}

const Material& material_of(const Mesh& mesh, const std::vector<Material>& materials, int e) {
  if (materials.empty()) throw DomainError("elasticity: no material given");
  if (materials.size() == 1) return materials.front();
  const int body = mesh.quad_body[e];
  if (body >= static_cast<int>(materials.size())) {
    throw DomainError("elasticity: no material for body " + std::to_string(body));
  }
  return materials[body];
}

}  // namespace

Eigen::Matrix<double, 8, 8> element_stiffness(const Mesh& mesh, int element,
                                              const Material& material) {
  const Eigen::Matrix3d D = material.plane_strain();
  Eigen::Matrix<double, 8, 8> ke = Eigen::Matrix<double, 8, 8>::Zero();
  for (double xi : {-kGauss, kGauss}) {
    for (double eta : {-kGauss, kGauss}) {
      const auto sd = shape_derivatives(mesh, element, xi, eta);
      ke.noalias() += sd.B.transpose() * D * sd.B * sd.detJ;
    }
  }
  return ke;
}

Matrix assemble_full_stiffness(const Mesh& mesh, const std::vector<Material>& materials,
                               const std::vector<Spring>& springs) {
  Matrix K = Matrix::Zero(mesh.n_dofs(), mesh.n_dofs());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto ke = element_stiffness(mesh, e, material_of(mesh, materials, e));
    const auto& q = mesh.quads[e];
    for (int a = 0; a < 4; ++a)
      for (int da = 0; da < 2; ++da)
        for (int b = 0; b < 4; ++b)
          for (int db = 0; db < 2; ++db)
            K(2 * q[a] + da, 2 * q[b] + db) += ke(2 * a + da, 2 * b + db);
  }
  for (const auto& s : springs) {
    if (s.direction != 0 && s.direction != 1) throw DomainError("spring: direction must be 0 or 1");
    for (const auto& edge : mesh.edge_set(s.edge_set)) {
      const double len = (mesh.coords[edge[1]] - mesh.coords[edge[0]]).norm();
      const double c = s.stiffness * len / 6.0;
      const int i = 2 * edge[0] + s.direction;
      const int j = 2 * edge[1] + s.direction;
      K(i, i) += 2 * c;
      K(j, j) += 2 * c;
      K(i, j) += c;
      K(j, i) += c;
    }
  }
  return K;
}

Vector assemble_full_load(const Mesh& mesh, const LoadCase& loads) {
  Vector f = Vector::Zero(mesh.n_dofs());
  for (const auto& t : loads.tractions) {
    for (const auto& edge : mesh.edge_set(t.edge_set)) {
      const geometry::Vec2 d = mesh.coords[edge[1]] - mesh.coords[edge[0]];
      // Counter-clockwise edge: outward normal is the tangent turned clockwise.
      const geometry::Vec2 n_len(d.y(), -d.x());
      const geometry::Vec2 force = -t.pressure * n_len * 0.5;  // per end node, exact for linear N
      for (int end : edge) {
        f(2 * end) += force.x();
        f(2 * end + 1) += force.y();
      }
    }
  }
  return f;
}

SystemMatrices assemble(const Mesh& mesh, const std::vector<Material>& materials,
                        const BoundaryConditions& bc, const LoadCase& loads, bool factorize) {
  SystemMatrices sys;
  sys.dof_map = make_dof_map(mesh, bc);
  const Matrix full = assemble_full_stiffness(mesh, materials, bc.springs);
  const auto& idx = sys.dof_map.free_to_full;
  sys.K = full(idx, idx);
  sys.f_ext = sys.dof_map.restrict_vector(assemble_full_load(mesh, loads));
  if (factorize) {
    try {
      auto factor = std::make_shared<linalg::Cholesky>(sys.K);
      const Matrix l = factor->lower();
      const double kmax = sys.K.diagonal().maxCoeff();
      for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (l(i, i) * l(i, i) < 1e-12 * kmax) {
          throw AssemblyError("assemble: stiffness is singular on the free dofs (free dof " +
                              std::to_string(i) + ")");
        }
      }
      sys.factor = std::move(factor);
    } catch (const FactorizationError& e) {
      throw AssemblyError("assemble: stiffness is singular on the free dofs (free dof " +
                          std::to_string(e.pivot()) + ")");
    }
  }
  return sys;
}

Vector assemble_load(const Mesh& mesh, const DofMap& dofs, const LoadCase& loads) {
  return dofs.restrict_vector(assemble_full_load(mesh, loads));
}

double energy(const Matrix& K, const Vector& f_ext, const Vector& u) {
  if (K.rows() != u.size() || K.cols() != u.size() || f_ext.size() != u.size()) {
    throw DimensionError("energy: dimension mismatch");
  }
  return 0.5 * u.dot(K * u) - f_ext.dot(u);
}

double compliance(const Matrix& K, const Vector& u) {
  if (K.rows() != u.size() || K.cols() != u.size()) throw DimensionError("compliance: dimension mismatch");
  return u.dot(K * u);
}

Eigen::Vector3d element_stress(const Mesh& mesh, int element, const Material& material,
                               const Vector& u_full, double xi, double eta) {
  const auto sd = shape_derivatives(mesh, element, xi, eta);
  Eigen::Matrix<double, 8, 1> ue;
  const auto& q = mesh.quads[element];
  for (int a = 0; a < 4; ++a) {
    ue(2 * a) = u_full(2 * q[a]);
    ue(2 * a + 1) = u_full(2 * q[a] + 1);
  }
  return material.plane_strain() * sd.B * ue;
}

}  // namespace contactopt::elasticity
