#include "shsnet/bounds.hpp"

#include "shsnet/compose.hpp"
#include "shsnet/model.hpp"

#include "doctest.h"

#include <cmath>

using namespace shsnet;

namespace {

Scenario small_scenario() {
  Scenario sc = build_consensus_scenario({.block_dim = 5});
  sc.simulation.bound.horizon = 1.0;
  sc.simulation.bound.runs = 8;
  return sc;
}

SimulationCertificate composed(const Scenario& sc) {
  return compose_ssf(sc.weights, sc.certificates, sc.concrete, sc.abstraction,
                     check_composition(sc, 1e-9), /*override_failed=*/true);
}

Vector grid_of(double horizon, double step) {
  const auto n = static_cast<Index>(std::llround(horizon / step)) + 1;
  Vector g(n);
  for (Index k = 0; k < n; ++k) g[k] = static_cast<double>(k) * step;
  return g;
}

}  // namespace

TEST_CASE("bound curve starts at the certificate value and decays") {
  const Scenario sc = small_scenario();
  const SimulationCertificate cert = composed(sc);
  const Vector grid = grid_of(2.0, 0.1);
  Vector p0 = Vector::Zero(2);
  p0[0] = 1.0;
  const Vector a = sc.simulation.bound.x0;
  const Vector ahat = sc.simulation.bound.xhat0;
  const ErrorBoundCurve curve = bound_curve(cert, a, ahat, p0, 0.0, grid);
  CHECK(curve.values[0] == cert.evaluate(a, ahat, 0));  // exact at t = 0
  for (Index k = 1; k < grid.size(); ++k) CHECK(curve.values[k] <= curve.values[k - 1]);
}

TEST_CASE("bound curve scales linearly in the initial certificate value") {
  const Scenario sc = small_scenario();
  const SimulationCertificate cert = composed(sc);
  const Vector grid = grid_of(1.0, 0.25);
  Vector p0 = Vector::Zero(2);
  p0[0] = 1.0;
  const Vector ahat = sc.simulation.bound.xhat0;
  const Matrix lift = sc.state_lift();
  const Vector a1 = lift * ahat + Vector::Ones(15);
  const Vector a2 = lift * ahat + 2.0 * Vector::Ones(15);  // 4x the certificate value
  const ErrorBoundCurve c1 = bound_curve(cert, a1, ahat, p0, 0.0, grid);
  const ErrorBoundCurve c2 = bound_curve(cert, a2, ahat, p0, 0.0, grid);
  for (Index k = 0; k < grid.size(); ++k) {
    CHECK(c2.values[k] == doctest::Approx(4.0 * c1.values[k]).epsilon(1e-12));
  }
}

TEST_CASE("lifted initial conditions give an identically zero bound") {
  const Scenario sc = small_scenario();
  const SimulationCertificate cert = composed(sc);
  const Vector grid = grid_of(1.0, 0.5);
  Vector p0 = Vector::Zero(2);
  p0[0] = 1.0;
  const Vector ahat = sc.simulation.bound.xhat0;
  const Vector a = sc.state_lift() * ahat;
  const ErrorBoundCurve curve = bound_curve(cert, a, ahat, p0, 0.0, grid);
  for (Index k = 0; k < grid.size(); ++k) CHECK(curve.values[k] <= 1e-12);
}

TEST_CASE("nonpositive decay rate is rejected") {
  const Scenario sc = small_scenario();
  SimulationCertificate cert = composed(sc);
  cert.kappa = 0.0;
  Vector p0 = Vector::Zero(2);
  p0[0] = 1.0;
  CHECK_THROWS_AS((void)bound_curve(cert, sc.simulation.bound.x0,
                                    sc.simulation.bound.xhat0, p0, 0.0, grid_of(1, 0.5)),
                  std::invalid_argument);
}

TEST_CASE("empirical curve starts at the deterministic initial error") {
  const Scenario sc = small_scenario();
  const Vector grid = grid_of(0.5, 0.1);
  const EmpiricalCurve emp = monte_carlo_error(sc, 4, grid, RngStream(3));
  const Vector y0 = sc.concrete.external_outputs(sc.simulation.bound.x0);
  const Vector yh0 = sc.abstraction.external_outputs(sc.simulation.bound.xhat0);
  CHECK(emp.mean[0] == doctest::Approx((y0 - yh0).squaredNorm()).epsilon(1e-12));
  CHECK(emp.std_error[0] <= 1e-12);
}

TEST_CASE("empirical curve stays below the bound on the consensus scenario") {
  const Scenario sc = small_scenario();
  const SimulationCertificate cert = composed(sc);
  const Vector grid = grid_of(1.0, 0.05);
  Vector p0 = Vector::Zero(2);
  p0[0] = 1.0;
  const ErrorBoundCurve bound = bound_curve(cert, sc.simulation.bound.x0,
                                            sc.simulation.bound.xhat0, p0, 0.0, grid);
  const EmpiricalCurve emp = monte_carlo_error(sc, 16, grid, RngStream(4));
  const BoundViolationReport report = compare(emp, bound);
  CHECK(report.empty());
  for (Index k = 0; k < grid.size(); ++k) {
    CHECK(emp.mean[k] + 2.0 * emp.std_error[k] <= bound.values[k]);
  }
}

TEST_CASE("a bound scaled down by 1e-3 is flagged") {
  const Scenario sc = small_scenario();
  const SimulationCertificate cert = composed(sc);
  const Vector grid = grid_of(1.0, 0.1);
  Vector p0 = Vector::Zero(2);
  p0[0] = 1.0;
  ErrorBoundCurve bound = bound_curve(cert, sc.simulation.bound.x0,
                                      sc.simulation.bound.xhat0, p0, 0.0, grid);
  bound.values *= 1e-3;
  const EmpiricalCurve emp = monte_carlo_error(sc, 16, grid, RngStream(5));
  const BoundViolationReport report = compare(emp, bound);
  CHECK_FALSE(report.empty());
}

TEST_CASE("an empty time grid yields an empty report") {
  EmpiricalCurve emp;
  emp.times = Vector(0);
  emp.mean = Vector(0);
  emp.std_error = Vector(0);
  ErrorBoundCurve bound;
  bound.times = Vector(0);
  bound.values = Vector(0);
  CHECK(compare(emp, bound).empty());
}

TEST_CASE("runs are substream deterministic") {
  const Scenario sc = small_scenario();
  const Vector grid = grid_of(0.5, 0.25);
  const EmpiricalCurve two = monte_carlo_error(sc, 2, grid, RngStream(77));
  const EmpiricalCurve many = monte_carlo_error(sc, 6, grid, RngStream(77));
  // the first two runs of the larger batch are the two runs of the smaller
  for (Index k = 0; k < grid.size(); ++k) {
    CHECK(two.per_run(k, 0) == many.per_run(k, 0));
    CHECK(two.per_run(k, 1) == many.per_run(k, 1));
  }
}

TEST_CASE("off-grid sample times are rejected") {
  const Scenario sc = small_scenario();
  Vector grid(2);
  grid << 0.0, 0.1234567;  // not a multiple of dt = 1e-3
  CHECK_THROWS_AS((void)monte_carlo_error(sc, 2, grid, RngStream(6)),
                  std::invalid_argument);
}

TEST_CASE("the matching single-mode noiseless pair has an identically zero curve") {
  Scenario sc = build_consensus_scenario({.block_dim = 5});
  for (auto* net : {&sc.concrete, &sc.abstraction}) {
    for (auto& s : net->subsystems) {
      for (auto& G : s.diffusion) G.setZero();
      s.rates.setZero();
    }
    net->chain.Q = Matrix::Zero(1, 1);  // frozen in the matching mode
    net->topology.matrices.resize(1);
  }
  sc.weights = Matrix::Ones(3, 1);
  sc.simulation.bound.xhat0 = Vector::Constant(3, 0.8);
  sc.simulation.bound.x0 = sc.state_lift() * sc.simulation.bound.xhat0;
  Vector grid(3);
  grid << 0.0, 0.5, 1.0;
  const EmpiricalCurve emp = monte_carlo_error(sc, 4, grid, RngStream(9));
  for (Index k = 0; k < grid.size(); ++k) {
    CHECK(emp.mean[k] <= 1e-18);
    CHECK(emp.std_error[k] <= 1e-18);
  }
}
