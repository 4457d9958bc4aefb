#include "shsnet/model.hpp"

#include "shsnet/rng.hpp"

#include "doctest.h"

#include <stdexcept>

using namespace shsnet;

TEST_CASE("consensus scenario reproduces the closed-form decay rate") {
  const Scenario sc = build_consensus_scenario(
      {.subsystem_count = 3, .block_dim = 50, .varpi = 0.3, .tau = 0.03, .chi = 1.0,
       .lambda = 10.0});
  REQUIRE(sc.certificates.size() == 3);
  for (const auto& cert : sc.certificates) {
    CHECK(cert.kappa == doctest::Approx(1.301).epsilon(1e-14));
    CHECK(cert.alpha_coeff == doctest::Approx(1.0));
  }
  CHECK(sc.concrete.state_dim() == 150);
  CHECK(sc.abstraction.state_dim() == 3);
}

TEST_CASE("all-to-all topology has the (n-1, -1, ...)/(-n) row pattern") {
  const Matrix M1 = fully_connected_topology(150);
  CHECK(M1(0, 0) == doctest::Approx(-149.0 / 150.0));
  CHECK(M1(0, 1) == doctest::Approx(1.0 / 150.0));
  CHECK(M1(42, 42) == doctest::Approx(-149.0 / 150.0));
  // rows sum to zero
  for (Index i = 0; i < 150; ++i) CHECK(M1.row(i).sum() == doctest::Approx(0.0));
}

TEST_CASE("gain below the jump/diffusion threshold is rejected") {
  // kappa = 2 chi - 2 lambda tau - varpi^2 - lambda tau^2 = -0.099 at chi = 0.3
  CHECK_THROWS_AS((void)build_consensus_scenario({.subsystem_count = 3, .block_dim = 50,
                                            .varpi = 0.3, .tau = 0.03, .chi = 0.3,
                                            .lambda = 10.0}),
                  std::invalid_argument);
}

TEST_CASE("validation accepts the example network") {
  const Scenario sc = build_consensus_scenario({.block_dim = 5});
  CHECK(validate_network(sc.concrete).ok());
  CHECK(validate_network(sc.abstraction).ok());
}

TEST_CASE("validation flags generator row sums") {
  Scenario sc = build_consensus_scenario({.block_dim = 4});
  sc.concrete.chain.Q(0, 0) = -0.4;  // row sum 0.1
  const ValidationReport report = validate_network(sc.concrete);
  REQUIRE_FALSE(report.ok());
  bool found = false;
  for (const auto& issue : report.issues) {
    if (issue.message.find("generator row sum") != std::string::npos) found = true;
  }
  CHECK(found);
}

TEST_CASE("validation names the mode with mismatched topology dimensions") {
  Scenario sc = build_consensus_scenario({.block_dim = 4});
  sc.concrete.topology.matrices[1] = Matrix::Zero(12, 5);  // wrong column count
  const ValidationReport report = validate_network(sc.concrete);
  REQUIRE_FALSE(report.ok());
  bool found = false;
  for (const auto& issue : report.issues) {
    if (issue.section == "topology" && issue.message.find("mode 2") != std::string::npos) {
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("interconnected drift equals M x + u for the integrator blocks") {
  // A = 0, D = I, C2 = I: the assembled network drift at mode j is M_j x + u
  const Scenario sc = build_consensus_scenario({.block_dim = 7});
  RngStream rng(3);
  for (Index mode = 0; mode < 2; ++mode) {
    const Matrix F = sc.concrete.closed_drift_matrix(mode);
    const Matrix& M = sc.concrete.topology.matrices[static_cast<std::size_t>(mode)];
    for (int trial = 0; trial < 5; ++trial) {
      Vector x(sc.concrete.state_dim());
      for (Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-5.0, 5.0);
      CHECK((F * x - M * x).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("chain generator rows sum to zero exactly as stored") {
  const Scenario sc = build_consensus_scenario({.block_dim = 4});
  const Matrix& Q = sc.concrete.chain.Q;
  for (Index i = 0; i < Q.rows(); ++i) CHECK(Q.row(i).sum() == 0.0);
}

TEST_CASE("storage certificate evaluates the squared block difference") {
  const Scenario sc = build_consensus_scenario({.block_dim = 5});
  const auto& cert = sc.certificates[0];
  RngStream rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Vector x(5);
    for (Index i = 0; i < 5; ++i) x[i] = rng.uniform(-2.0, 2.0);
    Vector xhat(1);
    xhat[0] = rng.uniform(-2.0, 2.0);
    const double expected = (x - Vector::Ones(5) * xhat[0]).squaredNorm();
    CHECK(cert.evaluate(x, xhat) == doctest::Approx(expected).epsilon(1e-12));
  }
}
