#pragma once

// Design problems: the two-snapshot wedge joint, the clamp-lite seal and small
// analytic problems. Each maps a design to an objective, constraints c >= 0
// and (optionally) their gradients.

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contactopt/bayesopt.hpp"
#include "contactopt/elasticity.hpp"
#include "contactopt/geometry.hpp"
#include "contactopt/nlpopt.hpp"

namespace contactopt::scenarios {

using linalg::Matrix;
using linalg::Vector;
using Groups = std::vector<std::vector<int>>;

/// Groups of `per_group` consecutive rows sharing their end rows:
/// (0..k-1), (k-1..2k-2), ... Requires (n - 1) divisible by per_group - 1.
Groups shared_endpoint_groups(int n, int per_group = 3);

/// Mean of lambda over each group. Throws DomainError on an empty group.
Vector segment_pressure(const Vector& lambda, const Groups& groups);

/// Averaging matrix A with A lambda = segment_pressure(lambda, groups), rows
/// offset by `offset` within an m-vector.
Matrix averaging_matrix(const Groups& groups, int m, int offset = 0);

/// (sum v_i^p)^(1/p) for v >= 0 and its gradient.
double p_norm(const Vector& v, double p);
Vector p_norm_gradient(const Vector& v, double p);

enum class Aggregation { ExactMax, PNorm };

class Scenario {
 public:
  virtual ~Scenario() = default;

  virtual std::string id() const = 0;
  virtual int p() const = 0;
  virtual int q() const = 0;
  virtual Vector lower() const = 0;
  virtual Vector upper() const = 0;
  virtual Vector initial() const = 0;
  /// Known feasible design used to start Bayesian runs.
  virtual std::optional<Vector> feasible_seed() const { return std::nullopt; }

  /// Objective and constraints for the gradient path; gradients are filled
  /// when requested.
  virtual nlpopt::Evaluation evaluate(const Vector& rho, bool gradients) const = 0;
  /// Objective and constraints for the Bayesian path.
  virtual bayesopt::CboEvaluation evaluate_cbo(const Vector& rho) const;

  /// Pressure profile at rho:
  /// snapshot,surface,row,node,x,y,multiplier,nodal_pressure,segment,segment_pressure
  /// Analytic problems write the header only.
  virtual void write_profile(const Vector& rho, std::ostream& os) const;
  static void write_profile_header(std::ostream& os);

  /// Rows with lambda_i > 1e-7 max|lambda|, one list per load snapshot; empty
  /// for problems without contact.
  virtual std::vector<std::vector<int>> active_sets(const Vector&) const { return {}; }

  nlpopt::NlpProblem nlp_problem() const;
  bayesopt::CboProblem cbo_problem() const;
};

// ---------------------------------------------------------------------------

struct WedgeParams {
  geometry::WedgeGeometry geometry;
  elasticity::Material material{200.0, 0.3};
  double support_stiffness = 0.02;  // normal springs on the right face of the right wedge
  double p2 = 2.0;                  // load on the left wedge's top in snapshot 2
  double lambda_lower = 1.0;        // segment pressure lower bound near the top
  double lambda_upper = 20.0;       // segment pressure upper bound everywhere
  int n_lower_segments = 4;         // top segments carrying the lower bound
  double p1_min = 0.5;
  double p1_max = 1.5;
  Eigen::Vector3d initial{39.0, 41.0, 1.0};
  Eigen::Vector3d seed{36.0, 42.0, 1.2};
};

/// Design (theta1 [deg], theta2 [deg], P1). Two snapshots share K: (P1, 0) and
/// (P1, P2). Constraint layout, snapshot-major:
///   [s1: lower segments (seg - lambda_lower), s1: all segments (lambda_upper - seg),
///    s2: lower, s2: all].
/// Objective a = P1.
class WedgeScenario : public Scenario {
 public:
  explicit WedgeScenario(WedgeParams params = {});

  std::string id() const override { return "wedge"; }
  int p() const override { return 3; }
  int q() const override;
  Vector lower() const override;
  Vector upper() const override;
  Vector initial() const override { return params_.initial; }
  std::optional<Vector> feasible_seed() const override { return Vector(params_.seed); }
  nlpopt::Evaluation evaluate(const Vector& rho, bool gradients) const override;
  void write_profile(const Vector& rho, std::ostream& os) const override;
  std::vector<std::vector<int>> active_sets(const Vector& rho) const override;

  const WedgeParams& params() const { return params_; }
  const Groups& segments() const { return segments_; }
  /// Segment indices carrying the lower bound (largest midpoint heights).
  const std::vector<int>& lower_segments() const { return lower_segments_; }
  /// Segment pressures per snapshot.
  std::vector<Vector> segment_pressures(const Vector& rho) const;

 private:
  WedgeParams params_;
  Groups segments_;
  std::vector<int> lower_segments_;
};

// ---------------------------------------------------------------------------

struct ClampLiteParams {
  geometry::ClampLiteGeometry geometry;
  elasticity::Material material{2e6, 0.3};
  double band_stiffness = 1e3;  // vertical springs on the retainer top
  int n_seal_nodes = 4;         // leftmost rows of the seal pair
  double seal_min = 30.0;
  double element_lower = 300.0;  // lower bound on the largest element pressure
  double element_upper = 650.0;
  double p_norm = 8.0;
  Aggregation gradient_aggregation = Aggregation::PNorm;
  Eigen::Vector4d initial{0.35, 0.32, 0.45, 0.41};
  Eigen::Vector4d seed{0.4015, 0.3515, 0.4440, 0.3994};
};

/// Design: middle control ordinates [retainer P2, retainer P3, flange P2,
/// flange P3]. Objective: compliance u^T K u. Constraint layout:
///   [seal - seal_min, element_upper - e_1 .. e_N, agg(e) - element_lower]
/// where e_k is the mean of the two end multipliers of interface element k and
/// agg is max (Bayesian path) or the p-norm (gradient path by default).
class ClampLiteScenario : public Scenario {
 public:
  explicit ClampLiteScenario(ClampLiteParams params = {});

  std::string id() const override { return "clamp-lite"; }
  int p() const override { return 4; }
  int q() const override;
  Vector lower() const override;
  Vector upper() const override;
  Vector initial() const override { return params_.initial; }
  std::optional<Vector> feasible_seed() const override { return Vector(params_.seed); }
  nlpopt::Evaluation evaluate(const Vector& rho, bool gradients) const override;
  bayesopt::CboEvaluation evaluate_cbo(const Vector& rho) const override;
  void write_profile(const Vector& rho, std::ostream& os) const override;
  std::vector<std::vector<int>> active_sets(const Vector& rho) const override;

  const ClampLiteParams& params() const { return params_; }
  nlpopt::Evaluation evaluate(const Vector& rho, bool gradients, Aggregation agg) const;

 private:
  ClampLiteParams params_;
  int n_interface_rows_ = 0;
};

// ---------------------------------------------------------------------------

/// Smooth problems with known optima:
///   "quadratic":     min (r - 1)^2        s.t. r >= 2,          r in [0, 5]
///   "circle":        min r1 + r2          s.t. 1 - |r|^2 >= 0,  r in [-2, 2]^2
///   "quadratic-1d":  min (r - 0.3)^2      s.t. r >= 0.5,        r in [0, 1]
class AnalyticScenario : public Scenario {
 public:
  explicit AnalyticScenario(std::string name);

  std::string id() const override { return name_; }
  int p() const override { return p_; }
  int q() const override { return 1; }
  Vector lower() const override { return lower_; }
  Vector upper() const override { return upper_; }
  Vector initial() const override { return initial_; }
  std::optional<Vector> feasible_seed() const override { return initial_; }
  nlpopt::Evaluation evaluate(const Vector& rho, bool gradients) const override;
  /// Analytic optimum.
  Vector optimum() const { return optimum_; }

 private:
  std::string name_;
  int p_ = 1;
  Vector lower_, upper_, initial_, optimum_;
};

/// Ids accepted by make_scenario.
std::vector<std::string> scenario_ids();

}  // namespace contactopt::scenarios
