#include "doctest.h"

#include <cmath>
#include <random>

#include "contactopt/forward.hpp"
#include "fixtures.hpp"

using namespace contactopt;
using namespace contactopt::forward;
using fixtures::Matrix;
using fixtures::Vector;

namespace {

// Random SPD system with m constraint rows and strictly positive g0, so u = 0
// is feasible.
ForwardProblem random_problem(int n, int m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = n01(rng);
  ForwardProblem p;
  p.K = b * b.transpose() + n * Matrix::Identity(n, n);
  p.f_ext.resize(n);
  for (int i = 0; i < n; ++i) p.f_ext(i) = 5 * n01(rng);
  p.G.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) p.G(i, j) = n01(rng);
  p.g0.resize(m);
  for (int i = 0; i < m; ++i) p.g0(i) = 0.1 + std::abs(n01(rng));
  return p;
}

}  // namespace

TEST_CASE("separated bodies: unconstrained solution") {
  auto p = fixtures::spring_wall(2.0, 1.0, 3.0);
  const auto s = solve_forward(p);
  CHECK(s.u(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.lambda(0) == 0.0);
  CHECK(s.gap(0) == doctest::Approx(2.5));
}

TEST_CASE("spring against a wall: active and inactive branches") {
  for (double k : {0.5, 1.0, 3.0})
    for (double d : {0.1, 1.0}) {
      for (double f : {0.3 * k * d, 2.0 * k * d, 10.0 * k * d}) {
        const auto s = solve_forward(fixtures::spring_wall(k, f, d));
        if (f > k * d) {
          CHECK(s.u(0) == doctest::Approx(d).epsilon(1e-10));
          CHECK(s.lambda(0) == doctest::Approx(f - k * d).epsilon(1e-10));
        } else {
          CHECK(s.u(0) == doctest::Approx(f / k).epsilon(1e-10));
          CHECK(s.lambda(0) == 0.0);
        }
        CHECK(s.kkt.max_scaled() <= 1e-10);
      }
    }
}

TEST_CASE("kkt residuals of exact solutions and perturbed multipliers") {
  const double k = 2.0, f = 5.0, d = 1.0;
  const auto p = fixtures::spring_wall(k, f, d);
  const auto r = kkt_residuals(p, Vector::Constant(1, d), Vector::Constant(1, f - k * d));
  CHECK(r.stationarity <= 1e-14);
  CHECK(r.primal <= 1e-14);
  CHECK(r.dual <= 1e-14);
  CHECK(r.complementarity <= 1e-14);
  const double eps = 1e-3;
  const auto rp = kkt_residuals(p, Vector::Constant(1, d), Vector::Constant(1, f - k * d + eps));
  CHECK(rp.stationarity == doctest::Approx(eps * 1.0).epsilon(1e-9));
  CHECK_THROWS_AS(kkt_residuals(p, Vector::Zero(2), Vector::Zero(1)), DimensionError);
}

TEST_CASE("wedge and clamp solves meet the KKT tolerance") {
  for (const auto& p : fixtures::wedge_problems({39, 41, 1.0})) {
    const auto s = solve_forward(p);
    CHECK(s.kkt.max_scaled() <= 1e-9);
    CHECK(s.lambda.maxCoeff() > 0);
  }
  const auto s = solve_forward(fixtures::clamp_problem({0.38, 0.35, 0.45, 0.40}));
  CHECK(s.kkt.max_scaled() <= 1e-9);
}

TEST_CASE("solution does not depend on the starting multipliers") {
  const auto p = fixtures::wedge_problems({36, 42, 1.2})[1];
  const auto ref = solve_forward(p);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 3; ++trial) {
    ForwardOptions o;
    o.lambda_start = Vector(p.m());
    for (int i = 0; i < p.m(); ++i) o.lambda_start(i) = u(rng);
    const auto s = solve_forward(p, o);
    CHECK((s.u - ref.u).norm() <= 1e-8 * ref.u.norm());
    CHECK((s.lambda - ref.lambda).norm() <= 1e-8 * ref.lambda.norm());
  }
}

TEST_CASE("solution minimizes the energy over feasible points") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto p = random_problem(10, 6, seed);
    const auto s = solve_forward(p);
    REQUIRE(s.kkt.max_scaled() <= 1e-9);
    const double e_star = elasticity::energy(p.K, p.f_ext, s.u);
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> n01;
    int tested = 0;
    while (tested < 100) {
      Vector v(p.n());
      for (int i = 0; i < p.n(); ++i) v(i) = s.u(i) + n01(rng);
      // Pull towards the feasible origin until admissible.
      while ((p.g0 + p.G * v).minCoeff() < 0) v *= 0.5;
      CHECK(elasticity::energy(p.K, p.f_ext, v) >= e_star - 1e-12 * std::abs(e_star));
      ++tested;
    }
  }
}

TEST_CASE("errors") {
  SUBCASE("iteration cap") {
    ForwardOptions o;
    o.max_iter = 1;
    o.polish = false;
    const auto p = fixtures::wedge_problems({39, 41, 1.0})[0];
    try {
      solve_forward(p, o);
      FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
      CHECK(e.residuals().size() == 2);
    }
  }
  SUBCASE("K not positive definite") {
    auto p = fixtures::spring_wall(1.0, 1.0, 1.0);
    p.K(0, 0) = -1.0;
    CHECK_THROWS_AS(solve_forward(p), FactorizationError);
  }
  SUBCASE("dimension mismatch") {
    auto p = fixtures::spring_wall(1.0, 1.0, 1.0);
    p.g0 = Vector::Zero(2);
    CHECK_THROWS_AS(solve_forward(p), DimensionError);
  }
}

TEST_CASE("masked rows carry no multiplier") {
  auto p = fixtures::spring_wall(1.0, 5.0, 1.0);
  p.row_mask = {false};
  const auto s = solve_forward(p);
  CHECK(s.lambda(0) == 0.0);
  CHECK(s.u(0) == doctest::Approx(5.0));
}
