#pragma once

// Parameterized 2D quad meshes whose topology does not depend on the design,
// cubic Bezier interfaces, and finite-difference design velocities dX/drho.

#include <array>
#include <cmath>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contactopt/errors.hpp"

namespace contactopt::geometry {

using Vec2 = Eigen::Vector2d;

/// Pair of ordered boundary node chains. Mortar integrals live on `mortar`
/// (side 2, carries the multipliers); `nonmortar` is side 1.
struct ContactChains {
  std::string name;
  std::vector<int> nonmortar;
  std::vector<int> mortar;
};

/// Boundary edge given by its two end nodes, oriented counter-clockwise with
/// respect to the owning element.
using Edge = std::array<int, 2>;

struct Mesh {
  std::vector<Vec2> coords;
  std::vector<std::array<int, 4>> quads;  // counter-clockwise
  std::vector<int> quad_body;
  int n_bodies = 0;
  std::map<std::string, std::vector<int>> node_sets;
  std::map<std::string, std::vector<Edge>> edge_sets;
  std::vector<ContactChains> contact_pairs;

  int n_nodes() const { return static_cast<int>(coords.size()); }
  int n_dofs() const { return 2 * n_nodes(); }
  int n_elements() const { return static_cast<int>(quads.size()); }

  const std::vector<int>& node_set(const std::string& name) const;
  const std::vector<Edge>& edge_set(const std::string& name) const;
  const ContactChains& contact_pair(const std::string& name) const;

  /// Nodal coordinates flattened as [x0, y0, x1, y1, ...].
  Eigen::VectorXd flat_coords() const;
};

/// Throws MeshQualityError unless every quad has a positive Jacobian at all
/// four 2x2 Gauss points.
void check_jacobians(const Mesh& mesh);

/// Smallest Jacobian determinant over all Gauss points.
double min_jacobian(const Mesh& mesh);

/// True when connectivity, body ids, node/edge sets and contact chains agree.
bool same_topology(const Mesh& a, const Mesh& b);

// ---------------------------------------------------------------------------
// Bezier curves

struct BezierCurve {
  std::array<Vec2, 4> points;
  /// free[i][d]: coordinate d of control point i is a design variable.
  std::array<std::array<bool, 2>, 4> free{};
};

/// B(t) = (1-t)^3 P1 + 3(1-t)^2 t P2 + 3(1-t) t^2 P3 + t^3 P4, 0 <= t <= 1.
Vec2 bezier_eval(const BezierCurve& curve, double t);

// ---------------------------------------------------------------------------
// Wedge joint

/// Mesh density of the two wedges. `right_along` elements lie on the mortar
/// chain and must be even (two-element segments).
struct WedgeResolution {
  int left_along = 20;
  int left_across = 8;
  int right_along = 22;
  int right_across = 8;
};

/// Wedge joint dimensions. Both inclined faces pass through the apex
/// (apex_x, height); each face makes its angle with the vertical.
struct WedgeGeometry {
  double height = 1.0;
  double apex_x = 1.5;
  double right_width = 3.0;  // right wedge spans x in [apex_x, apex_x + right_width] at the top
  double theta_min = 30.0;
  double theta_max = 60.0;
  double bound_slack = 1e-3;  // admissible overshoot for finite-difference stencils
  // P1 acts on the part of the right face between these height fractions.
  double p1_from = 0.0;
  double p1_to = 1.0;
  WedgeResolution resolution;
};

/// Node sets: "dirichlet_x" (left face of the left wedge), "dirichlet_y"
/// (both bottoms). Edge sets: "p1_face" and "support" (right face of the right
/// wedge), "p2_face" (top face of the left wedge). Contact pair "wedge": nonmortar = left wedge incline,
/// mortar = right wedge incline, both ordered from the apex downwards.
Mesh build_wedge_mesh(double theta1_deg, double theta2_deg, const WedgeGeometry& geo = {});

// ---------------------------------------------------------------------------
// Clamp-lite

struct ClampLiteResolution {
  int flange_along = 40;
  int flange_across = 6;
  int retainer_along = 32;
  int retainer_across = 6;
  int box_along = 24;
};

/// Two-body clamp: a flange (bottom) whose top face is a cubic Bezier curve and
/// which sits on a rigid box, and a retainer (top) whose bottom face is another
/// cubic Bezier curve. The four design variables are the ordinates of the
/// middle control points: [retainer P2, retainer P3, flange P2, flange P3].
struct ClampLiteGeometry {
  std::array<double, 2> retainer_ctrl_x{0.617, 0.883};
  std::array<double, 2> flange_ctrl_x{0.50, 0.773};
  std::array<double, 2> retainer_end_y{0.40, 0.32};
  std::array<double, 2> flange_end_y{0.47, 0.37};
  double retainer_shift = 0.035;  // vertical offset of the whole retainer curve
  double retainer_top = 0.6;
  double box_depth = 0.1;
  double max_interference = 0.05;
  std::array<double, 4> lower{0.35, 0.35, 0.443, 0.3834};
  std::array<double, 4> upper{0.408, 0.354, 0.47, 0.44};
  double admissible_margin = 0.05;  // builder accepts [lower - margin, upper + margin]
  ClampLiteResolution resolution;
};

/// Evenly spaced control abscissae: the two fixed middle abscissae determine
/// the end abscissae.
BezierCurve clamp_retainer_curve(const Eigen::Vector4d& rho, const ClampLiteGeometry& geo = {});
BezierCurve clamp_flange_curve(const Eigen::Vector4d& rho, const ClampLiteGeometry& geo = {});

/// Node sets: "dirichlet_x" (flange right face, retainer top, box),
/// "dirichlet_y" (flange right face except its bottom node, box). Edge sets: "band" (retainer top
/// face, carries the band springs). Contact pairs: "interface"
/// (nonmortar = retainer bottom, mortar = flange top, increasing x) and
/// "seal" (nonmortar = box top, mortar = flange bottom, increasing x).
Mesh build_clamp_lite_mesh(const Eigen::Vector4d& rho, const ClampLiteGeometry& geo = {});

// ---------------------------------------------------------------------------
// Stacked blocks (verification fixture)

/// Two rectangles of width `width` meeting along y = 0: the lower one spans
/// [-lower_height, 0], the upper one [gap, gap + upper_height]. The interface
/// discretizations differ when lower_along != upper_along.
struct StackedBlocks {
  double width = 1.0;
  double lower_height = 0.5;
  double upper_height = 0.5;
  double gap = 0.0;
  int lower_along = 5;
  int upper_along = 7;
  int lower_across = 2;
  int upper_across = 2;
};

/// Node sets: "dirichlet_x" (left faces), "dirichlet_y" (lower block
/// bottom). Edge sets: "top" (upper block top). Contact pair "interface":
/// nonmortar = upper block bottom, mortar = lower block top, increasing x.
Mesh build_stacked_blocks(const StackedBlocks& spec = {});

// ---------------------------------------------------------------------------
// Design velocities

using MeshBuilder = std::function<Mesh(const Eigen::VectorXd&)>;

/// Central finite difference of nodal coordinates, (2 n_nodes) x p, with
/// per-component step rel_step * (1 + |rho_i|). Throws TopologyError if the
/// perturbed meshes disagree in topology.
Eigen::MatrixXd design_velocity(const MeshBuilder& builder, const Eigen::VectorXd& rho,
                                double rel_step = 1e-6);

/// Step used for component value `rho_i`.
inline double fd_step(double rho_i, double rel_step) { return rel_step * (1.0 + std::abs(rho_i)); }

// ---------------------------------------------------------------------------
// Export

/// node,x,y
void write_coords_csv(const Mesh& mesh, std::ostream& os);
/// element,n0,n1,n2,n3,body
void write_connectivity_csv(const Mesh& mesh, std::ostream& os);

}  // namespace contactopt::geometry
