#include "contactopt/mortar.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace contactopt::mortar {

using geometry::Mesh;
using geometry::Vec2;

const PairRows& MortarData::pair(const std::string& name) const {
  for (const auto& p : pairs)
    if (p.name == name) return p;
  throw DomainError("mortar: unknown contact pair '" + name + "'");
}

namespace {

constexpr double kGauss = 0.57735026918962576;

// Outward normal of the boundary edge (a, b) with respect to the quad owning it.
Vec2 outward_normal(const Mesh& mesh, const std::map<std::pair<int, int>, int>& edge_owner, int a,
                    int b) {
  const Vec2 t = mesh.coords[b] - mesh.coords[a];
  const double len = t.norm();
  if (!(len > 0.0)) {
    throw MeshQualityError("mortar: zero-length segment between nodes " + std::to_string(a) +
                           " and " + std::to_string(b));
  }
  Vec2 n(t.y() / len, -t.x() / len);
  auto it = edge_owner.find({std::min(a, b), std::max(a, b)});
  if (it == edge_owner.end()) {
    throw TopologyError("mortar: nodes " + std::to_string(a) + ", " + std::to_string(b) +
                        " do not form an element edge");
  }
  Vec2 centroid = Vec2::Zero();
  for (int k : mesh.quads[it->second]) centroid += mesh.coords[k] / 4.0;
  if (n.dot(centroid - mesh.coords[a]) > 0.0) n = -n;
  return n;
}

class RowWriter {
 public:
  RowWriter(MortarData& md, const elasticity::DofMap& dofs) : md_(md), dofs_(dofs) {}

  void add(int row, int node, const Vec2& coef) {
    for (int d = 0; d < 2; ++d) {
      const int col = dofs_.full_to_free[2 * node + d];
      if (col >= 0) md_.G(row, col) += coef(d);
    }
  }

 private:
  MortarData& md_;
  const elasticity::DofMap& dofs_;
};

void add_pair(MortarData& md, const Mesh& mesh, const geometry::ContactChains& chains,
              const std::map<std::pair<int, int>, int>& edge_owner, const elasticity::DofMap& dofs,
              int offset) {
  const auto& m2 = chains.mortar;
  const auto& m1 = chains.nonmortar;
  PairRows rows;
  rows.name = chains.name;
  rows.offset = offset;
  rows.mortar_nodes = m2;
  rows.nonmortar_nodes = m1;
  RowWriter writer(md, dofs);

  for (std::size_t e = 0; e + 1 < m2.size(); ++e) {
    const int a = m2[e], b = m2[e + 1];
    const Vec2 xa = mesh.coords[a], xb = mesh.coords[b];
    const Vec2 n = outward_normal(mesh, edge_owner, a, b);
    rows.normals.push_back(n);
    const Vec2 t = xb - xa;
    const double len2 = t.squaredNorm();
    const double len = std::sqrt(len2);
    const int ra = offset + static_cast<int>(e), rb = ra + 1;

    for (std::size_t s = 0; s + 1 < m1.size(); ++s) {
      const int c = m1[s], d = m1[s + 1];
      const Vec2 xc = mesh.coords[c], xd = mesh.coords[d];
      if (!((xd - xc).norm() > 0.0)) {
        throw MeshQualityError("mortar: zero-length segment between nodes " + std::to_string(c) +
                               " and " + std::to_string(d));
      }
      const double eta_c = (xc - xa).dot(t) / len2;
      const double eta_d = (xd - xa).dot(t) / len2;
      if (std::abs(eta_d - eta_c) < 1e-14) continue;
      const double lo = std::max(0.0, std::min(eta_c, eta_d));
      const double hi = std::min(1.0, std::max(eta_c, eta_d));
      if (hi - lo <= 1e-14) continue;

      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (double gp : {-kGauss, kGauss}) {
        const double eta = mid + half * gp;
        const double w = half * len;
        const double zeta = (eta - eta_c) / (eta_d - eta_c);
        const Vec2 x1 = (1.0 - zeta) * xc + zeta * xd;
        const Vec2 x2 = (1.0 - eta) * xa + eta * xb;
        const double g = n.dot(x1 - x2);
        const double phi[2] = {1.0 - eta, eta};
        const int r[2] = {ra, rb};
        for (int j = 0; j < 2; ++j) {
          const double wj = w * phi[j];
          md.g0(r[j]) += wj * g;
          md.weights(r[j]) += wj;
          for (int k = 0; k < 2; ++k) md.mass(r[j], r[k]) += wj * phi[k];
          writer.add(r[j], c, wj * (1.0 - zeta) * n);
          writer.add(r[j], d, wj * zeta * n);
          writer.add(r[j], a, -wj * (1.0 - eta) * n);
          writer.add(r[j], b, -wj * eta * n);
        }
      }
    }
  }
  md.pairs.push_back(std::move(rows));
}

}  // namespace

MortarData build_mortar(const Mesh& mesh, const std::vector<std::string>& pair_names,
                        const elasticity::DofMap& dofs) {
  if (dofs.n_full() != mesh.n_dofs()) throw DimensionError("build_mortar: dof map does not fit mesh");
  std::map<std::pair<int, int>, int> edge_owner;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& q = mesh.quads[e];
    for (int k = 0; k < 4; ++k) {
      const int a = q[k], b = q[(k + 1) % 4];
      edge_owner[{std::min(a, b), std::max(a, b)}] = e;
    }
  }
  int m = 0;
  for (const auto& name : pair_names) m += static_cast<int>(mesh.contact_pair(name).mortar.size());

  MortarData md;
  md.G = Matrix::Zero(m, dofs.n_free());
  md.g0 = Vector::Zero(m);
  md.weights = Vector::Zero(m);
  md.mass = Matrix::Zero(m, m);
  int offset = 0;
  for (const auto& name : pair_names) {
    const auto& chains = mesh.contact_pair(name);
    add_pair(md, mesh, chains, edge_owner, dofs, offset);
    offset += static_cast<int>(chains.mortar.size());
  }
  return md;
}

MortarData build_mortar(const Mesh& mesh, const std::vector<std::string>& pair_names) {
  elasticity::DofMap all;
  for (int d = 0; d < mesh.n_dofs(); ++d) {
    all.full_to_free.push_back(d);
    all.free_to_full.push_back(d);
  }
  return build_mortar(mesh, pair_names, all);
}

Vector gap(const MortarData& md, const Vector& u) {
  if (u.size() != md.G.cols()) throw DimensionError("gap: displacement size mismatch");
  return md.g0 + md.G * u;
}

Vector nodal_pressure(const MortarData& md, const Vector& lambda) {
  if (lambda.size() != md.rows()) throw DimensionError("nodal_pressure: multiplier size mismatch");
  const Vector force = md.mass * lambda;
  Vector p = Vector::Zero(md.rows());
  for (int j = 0; j < md.rows(); ++j)
    if (md.weights(j) > 0.0) p(j) = force(j) / md.weights(j);
  return p;
}

MortarDesignDerivs mortar_design_derivs(const MortarBuilder& builder, const Eigen::VectorXd& rho,
                                        const Vector& u, const Vector& lambda, double rel_step) {
  const Eigen::Index p = rho.size();
  MortarDesignDerivs out;
  for (Eigen::Index i = 0; i < p; ++i) {
    const double h = geometry::fd_step(rho(i), rel_step);
    Eigen::VectorXd rp = rho, rm = rho;
    rp(i) += h;
    rm(i) -= h;
    const MortarData plus = builder(rp);
    const MortarData minus = builder(rm);
    if (plus.G.rows() != minus.G.rows() || plus.G.cols() != minus.G.cols()) {
      throw TopologyError("mortar_design_derivs: row or column count changed under perturbation");
    }
    if (plus.G.cols() != u.size() || plus.G.rows() != lambda.size()) {
      throw DimensionError("mortar_design_derivs: u or lambda does not match the mortar data");
    }
    if (i == 0) {
      out.dg0.resize(plus.rows(), p);
      out.dGt_lambda.resize(plus.G.cols(), p);
      out.dG_u.resize(plus.rows(), p);
    }
    out.dg0.col(i) = (plus.g0 - minus.g0) / (2 * h);
    out.dGt_lambda.col(i) = (plus.G.transpose() * lambda - minus.G.transpose() * lambda) / (2 * h);
    out.dG_u.col(i) = (plus.G * u - minus.G * u) / (2 * h);
  }
  return out;
}

}  // namespace contactopt::mortar
