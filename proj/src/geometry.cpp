#include "contactopt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace contactopt::geometry {

const std::vector<int>& Mesh::node_set(const std::string& name) const {
  auto it = node_sets.find(name);
  if (it == node_sets.end()) throw DomainError("mesh: unknown node set '" + name + "'");
  return it->second;
}

const std::vector<Edge>& Mesh::edge_set(const std::string& name) const {
  auto it = edge_sets.find(name);
  if (it == edge_sets.end()) throw DomainError("mesh: unknown edge set '" + name + "'");
  return it->second;
}

const ContactChains& Mesh::contact_pair(const std::string& name) const {
  for (const auto& p : contact_pairs) {
    if (p.name == name) return p;
  }
  throw DomainError("mesh: unknown contact pair '" + name + "'");
}

Eigen::VectorXd Mesh::flat_coords() const {
  Eigen::VectorXd x(n_dofs());
  for (int i = 0; i < n_nodes(); ++i) {
    x(2 * i) = coords[i].x();
    x(2 * i + 1) = coords[i].y();
  }
  return x;
}

namespace {

constexpr double kGauss = 0.57735026918962576;  // 1/sqrt(3)

double quad_jacobian(const Mesh& mesh, const std::array<int, 4>& q, double xi, double eta) {
  const double dn_dxi[4] = {-(1 - eta) / 4, (1 - eta) / 4, (1 + eta) / 4, -(1 + eta) / 4};
  const double dn_deta[4] = {-(1 - xi) / 4, -(1 + xi) / 4, (1 + xi) / 4, (1 - xi) / 4};
  double j00 = 0, j01 = 0, j10 = 0, j11 = 0;
  for (int a = 0; a < 4; ++a) {
    const Vec2& p = mesh.coords[q[a]];
    j00 += dn_dxi[a] * p.x();
    j01 += dn_dxi[a] * p.y();
    j10 += dn_deta[a] * p.x();
    j11 += dn_deta[a] * p.y();
  }
  return j00 * j11 - j01 * j10;
}

/// Structured (nu+1) x (nv+1) node block appended to a mesh.
struct Block {
  int offset = 0;
  int nu = 0;
  int nv = 0;
  int node(int i, int j) const { return offset + i + j * (nu + 1); }

  std::vector<int> column(int i) const {
    std::vector<int> out;
    for (int j = 0; j <= nv; ++j) out.push_back(node(i, j));
    return out;
  }
  std::vector<int> row(int j) const {
    std::vector<int> out;
    for (int i = 0; i <= nu; ++i) out.push_back(node(i, j));
    return out;
  }
  std::vector<int> all() const {
    std::vector<int> out;
    for (int j = 0; j <= nv; ++j)
      for (int i = 0; i <= nu; ++i) out.push_back(node(i, j));
    return out;
  }
  // Counter-clockwise boundary edges.
  std::vector<Edge> bottom() const {
    std::vector<Edge> e;
    for (int i = 0; i < nu; ++i) e.push_back({node(i, 0), node(i + 1, 0)});
    return e;
  }
  std::vector<Edge> right() const {
    std::vector<Edge> e;
    for (int j = 0; j < nv; ++j) e.push_back({node(nu, j), node(nu, j + 1)});
    return e;
  }
  std::vector<Edge> top() const {
    std::vector<Edge> e;
    for (int i = nu; i > 0; --i) e.push_back({node(i, nv), node(i - 1, nv)});
    return e;
  }
};

template <class Map>
Block add_block(Mesh& mesh, Map&& map, int nu, int nv, int body) {
  Block b{mesh.n_nodes(), nu, nv};
  for (int j = 0; j <= nv; ++j) {
    for (int i = 0; i <= nu; ++i) {
      mesh.coords.push_back(map(static_cast<double>(i) / nu, static_cast<double>(j) / nv));
    }
  }
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      mesh.quads.push_back({b.node(i, j), b.node(i + 1, j), b.node(i + 1, j + 1), b.node(i, j + 1)});
      mesh.quad_body.push_back(body);
    }
  }
  mesh.n_bodies = std::max(mesh.n_bodies, body + 1);
  return b;
}

Vec2 bilinear(const Vec2& c00, const Vec2& c10, const Vec2& c11, const Vec2& c01, double u, double v) {
  return (1 - u) * (1 - v) * c00 + u * (1 - v) * c10 + u * v * c11 + (1 - u) * v * c01;
}

template <class T>
void append(std::vector<T>& dst, const std::vector<T>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

std::vector<int> reversed(std::vector<int> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

void check_jacobians(const Mesh& mesh) {
  for (int e = 0; e < mesh.n_elements(); ++e) {
    for (double xi : {-kGauss, kGauss}) {
      for (double eta : {-kGauss, kGauss}) {
        if (!(quad_jacobian(mesh, mesh.quads[e], xi, eta) > 0.0)) {
          throw MeshQualityError("mesh: element " + std::to_string(e) +
                                 " has a non-positive Jacobian");
        }
      }
    }
  }
}

double min_jacobian(const Mesh& mesh) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& q : mesh.quads) {
    for (double xi : {-kGauss, kGauss})
      for (double eta : {-kGauss, kGauss}) m = std::min(m, quad_jacobian(mesh, q, xi, eta));
  }
  return m;
}

bool same_topology(const Mesh& a, const Mesh& b) {
  if (a.n_nodes() != b.n_nodes() || a.quads != b.quads || a.quad_body != b.quad_body ||
      a.node_sets != b.node_sets || a.edge_sets != b.edge_sets ||
      a.contact_pairs.size() != b.contact_pairs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.contact_pairs.size(); ++i) {
    const auto& p = a.contact_pairs[i];
    const auto& q = b.contact_pairs[i];
    if (p.name != q.name || p.nonmortar != q.nonmortar || p.mortar != q.mortar) return false;
  }
  return true;
}

Vec2 bezier_eval(const BezierCurve& curve, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("bezier_eval: t outside [0, 1]");
  const double s = 1.0 - t;
  const auto& p = curve.points;
  return s * s * s * p[0] + 3.0 * s * s * t * p[1] + 3.0 * s * t * t * p[2] + t * t * t * p[3];
}

// ---------------------------------------------------------------------------

Mesh build_wedge_mesh(double theta1_deg, double theta2_deg, const WedgeGeometry& geo) {
  for (double th : {theta1_deg, theta2_deg}) {
    if (!(th >= geo.theta_min - geo.bound_slack && th <= geo.theta_max + geo.bound_slack)) {
      throw DomainError("build_wedge_mesh: angle " + std::to_string(th) + " outside [" +
                        std::to_string(geo.theta_min) + ", " + std::to_string(geo.theta_max) +
                        "]");
    }
  }
  const auto& res = geo.resolution;
  if (res.right_along < 2 || res.right_along % 2 != 0) {
    throw DomainError("build_wedge_mesh: right_along must be a positive even count");
  }
  const double deg = std::numbers::pi / 180.0;
  const double h = geo.height;
  const Vec2 apex(geo.apex_x, h);
  const Vec2 foot1(geo.apex_x + h * std::tan(theta1_deg * deg), 0.0);
  const Vec2 foot2(geo.apex_x + h * std::tan(theta2_deg * deg), 0.0);
  const double x_right = geo.apex_x + geo.right_width;
  if (!(foot2.x() < x_right)) throw MeshQualityError("build_wedge_mesh: right wedge collapses");

  Mesh mesh;
  // Left wedge: u runs left -> incline, v bottom -> top.
  const Block left = add_block(
      mesh,
      [&](double u, double v) { return bilinear(Vec2(0, 0), foot1, apex, Vec2(0, h), u, v); },
      res.left_across, res.left_along, 0);
  // Right wedge: u runs incline -> right face.
  const Block right = add_block(
      mesh,
      [&](double u, double v) {
        return bilinear(foot2, Vec2(x_right, 0), Vec2(x_right, h), apex, u, v);
      },
      res.right_across, res.right_along, 1);

  mesh.node_sets["dirichlet_x"] = left.column(0);
  mesh.node_sets["dirichlet_y"] = sorted_unique([&] {
    auto v = left.row(0);
    append(v, right.row(0));
    return v;
  }());
  {
    const auto face = right.right();
    const int from = static_cast<int>(std::lround(geo.p1_from * right.nv));
    const int to = static_cast<int>(std::lround(geo.p1_to * right.nv));
    if (!(0 <= from && from < to && to <= right.nv)) {
      throw DomainError("build_wedge_mesh: empty or invalid P1 face extent");
    }
    mesh.edge_sets["p1_face"] = std::vector<Edge>(face.begin() + from, face.begin() + to);
  }
  mesh.edge_sets["support"] = right.right();
  mesh.edge_sets["p2_face"] = left.top();

  ContactChains pair;
  pair.name = "wedge";
  pair.nonmortar = reversed(left.column(left.nu));
  pair.mortar = reversed(right.column(0));
  mesh.contact_pairs.push_back(std::move(pair));

  check_jacobians(mesh);
  return mesh;
}

// ---------------------------------------------------------------------------

namespace {

BezierCurve even_curve(double x2, double x3, double y1, double y2, double y3, double y4,
                       double shift) {
  const double dx = x3 - x2;
  BezierCurve c;
  c.points = {Vec2(x2 - dx, y1 + shift), Vec2(x2, y2 + shift), Vec2(x3, y3 + shift),
              Vec2(x3 + dx, y4 + shift)};
  c.free[1][1] = true;
  c.free[2][1] = true;
  return c;
}

void check_clamp_bounds(const Eigen::Vector4d& rho, const ClampLiteGeometry& geo) {
  for (int i = 0; i < 4; ++i) {
    const double lo = geo.lower[i] - geo.admissible_margin;
    const double hi = geo.upper[i] + geo.admissible_margin;
    if (!(rho(i) >= lo && rho(i) <= hi)) {
      throw DomainError("build_clamp_lite_mesh: rho[" + std::to_string(i) + "] = " +
                        std::to_string(rho(i)) + " outside admissible range");
    }
  }
}

// Curve ordinate at abscissa x; the control abscissae are evenly spaced so x(t)
// is affine and t follows directly.
double curve_y_at(const BezierCurve& c, double x) {
  const double t = (x - c.points[0].x()) / (c.points[3].x() - c.points[0].x());
  return bezier_eval(c, std::clamp(t, 0.0, 1.0)).y();
}

}  // namespace

BezierCurve clamp_retainer_curve(const Eigen::Vector4d& rho, const ClampLiteGeometry& geo) {
  return even_curve(geo.retainer_ctrl_x[0], geo.retainer_ctrl_x[1], geo.retainer_end_y[0], rho(0),
                    rho(1), geo.retainer_end_y[1], geo.retainer_shift);
}

BezierCurve clamp_flange_curve(const Eigen::Vector4d& rho, const ClampLiteGeometry& geo) {
  return even_curve(geo.flange_ctrl_x[0], geo.flange_ctrl_x[1], geo.flange_end_y[0], rho(2),
                    rho(3), geo.flange_end_y[1], 0.0);
}

Mesh build_clamp_lite_mesh(const Eigen::Vector4d& rho, const ClampLiteGeometry& geo) {
  check_clamp_bounds(rho, geo);
  const auto& res = geo.resolution;
  const BezierCurve flange_c = clamp_flange_curve(rho, geo);
  const BezierCurve retainer_c = clamp_retainer_curve(rho, geo);

  // Reference surfaces may overlap by at most the configured interference.
  const double x_lo = std::max(flange_c.points[0].x(), retainer_c.points[0].x());
  const double x_hi = std::min(flange_c.points[3].x(), retainer_c.points[3].x());
  for (int k = 0; k <= 400; ++k) {
    const double x = x_lo + (x_hi - x_lo) * k / 400.0;
    const double overlap = curve_y_at(flange_c, x) - curve_y_at(retainer_c, x);
    if (overlap > geo.max_interference) {
      throw MeshQualityError("build_clamp_lite_mesh: interface curves cross beyond the "
                             "configured interference at x = " + std::to_string(x));
    }
  }

  Mesh mesh;
  const Block flange = add_block(
      mesh,
      [&](double u, double v) {
        const Vec2 top = bezier_eval(flange_c, u);
        return Vec2(top.x(), v * top.y());
      },
      res.flange_along, res.flange_across, 0);
  const Block retainer = add_block(
      mesh,
      [&](double u, double v) {
        const Vec2 bottom = bezier_eval(retainer_c, u);
        return Vec2(bottom.x(), bottom.y() + v * (geo.retainer_top - bottom.y()));
      },
      res.retainer_along, res.retainer_across, 1);
  const double box_lo = flange_c.points[0].x() - 0.05;
  const double box_hi = flange_c.points[3].x() + 0.05;
  const Block box = add_block(
      mesh,
      [&](double u, double v) {
        return Vec2(box_lo + u * (box_hi - box_lo), -geo.box_depth * (1.0 - v));
      },
      res.box_along, 1, 2);

  std::vector<int> fix_x = flange.column(flange.nu);
  append(fix_x, retainer.row(retainer.nv));
  append(fix_x, box.all());
  // The flange's bottom-right node rests on the box: fixing it in y as well
  // would make the seal rows linearly dependent.
  std::vector<int> fix_y = flange.column(flange.nu);
  fix_y.erase(fix_y.begin());
  append(fix_y, box.all());
  mesh.node_sets["dirichlet_x"] = sorted_unique(fix_x);
  mesh.node_sets["dirichlet_y"] = sorted_unique(fix_y);
  mesh.edge_sets["band"] = retainer.top();

  ContactChains interface;
  interface.name = "interface";
  interface.nonmortar = retainer.row(0);
  interface.mortar = flange.row(flange.nv);
  ContactChains seal;
  seal.name = "seal";
  seal.nonmortar = box.row(box.nv);
  seal.mortar = flange.row(0);
  mesh.contact_pairs.push_back(std::move(interface));
  mesh.contact_pairs.push_back(std::move(seal));

  check_jacobians(mesh);
  return mesh;
}

// ---------------------------------------------------------------------------

Mesh build_stacked_blocks(const StackedBlocks& spec) {
  if (!(spec.width > 0 && spec.lower_height > 0 && spec.upper_height > 0) || spec.lower_along < 1 ||
      spec.upper_along < 1 || spec.lower_across < 1 || spec.upper_across < 1) {
    throw DomainError("build_stacked_blocks: non-positive dimension or count");
  }
  Mesh mesh;
  const double w = spec.width;
  const Block lower = add_block(
      mesh, [&](double u, double v) { return Vec2(u * w, -spec.lower_height * (1.0 - v)); },
      spec.lower_along, spec.lower_across, 0);
  const Block upper = add_block(
      mesh, [&](double u, double v) { return Vec2(u * w, spec.gap + spec.upper_height * v); },
      spec.upper_along, spec.upper_across, 1);
  mesh.node_sets["dirichlet_x"] = sorted_unique([&] {
    auto v = lower.column(0);
    append(v, upper.column(0));
    return v;
  }());
  mesh.node_sets["dirichlet_y"] = lower.row(0);
  mesh.edge_sets["top"] = upper.top();
  ContactChains pair;
  pair.name = "interface";
  pair.nonmortar = upper.row(0);
  pair.mortar = lower.row(lower.nv);
  mesh.contact_pairs.push_back(std::move(pair));
  check_jacobians(mesh);
  return mesh;
}

Eigen::MatrixXd design_velocity(const MeshBuilder& builder, const Eigen::VectorXd& rho,
                                double rel_step) {
  const Mesh base = builder(rho);
  Eigen::MatrixXd v(base.n_dofs(), rho.size());
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    const double h = fd_step(rho(k), rel_step);
    Eigen::VectorXd rp = rho, rm = rho;
    rp(k) += h;
    rm(k) -= h;
    const Mesh mp = builder(rp);
    const Mesh mm = builder(rm);
    if (!same_topology(base, mp) || !same_topology(base, mm)) {
      throw TopologyError("design_velocity: topology changed under perturbation of rho[" +
                          std::to_string(k) + "]");
    }
    v.col(k) = (mp.flat_coords() - mm.flat_coords()) / (2.0 * h);
  }
  return v;
}

void write_coords_csv(const Mesh& mesh, std::ostream& os) {
  os << "node,x,y\n";
  os.precision(17);
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    os << i << ',' << mesh.coords[i].x() << ',' << mesh.coords[i].y() << '\n';
  }
}

void write_connectivity_csv(const Mesh& mesh, std::ostream& os) {
  os << "element,n0,n1,n2,n3,body\n";
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& q = mesh.quads[e];
    os << e << ',' << q[0] << ',' << q[1] << ',' << q[2] << ',' << q[3] << ','
       << mesh.quad_body[e] << '\n';
  }
}

}  // namespace contactopt::geometry
