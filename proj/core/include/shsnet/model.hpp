#pragma once

#include "shsnet/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace shsnet {

// =============================================================================
// Subsystems and networks
// =============================================================================

/// One linear stochastic hybrid subsystem with multiplicative noise:
///   dx = (A x + B u + D w) dt + sum_k (G_k x) dW_k + sum_k (R_k x) dP_k
///   y1 = C1 x   (external output)
///   y2 = C2 x   (internal output, coupled through the interconnection)
///
/// u is the external input (dim m), w the internal input (dim p). Each
/// Brownian channel k contributes one diffusion column G_k x; each Poisson
/// channel k resets the state by x += R_k x at its jump times (rate
/// rates[k]). Nonlinear dynamics are deliberately out of certification
/// scope; see GeneralDrift for the simulation-only escape hatch.
struct LinearSubsystem {
  Index n = 0;   ///< state dimension
  Index m = 0;   ///< external input dimension
  Index p = 0;   ///< internal input dimension
  Index q1 = 0;  ///< external output dimension
  Index q2 = 0;  ///< internal output dimension

  Matrix A, B, D;
  std::vector<Matrix> diffusion;  ///< G_k, each n x n
  std::vector<Matrix> resets;     ///< R_k, each n x n
  Vector rates;                   ///< jump rate per reset channel, >= 0
  Matrix C1, C2;

  [[nodiscard]] Index brownian_channels() const {
    return static_cast<Index>(diffusion.size());
  }
  [[nodiscard]] Index poisson_channels() const {
    return static_cast<Index>(resets.size());
  }

  /// Noisy-integrator block: A = 0, B = D = I_n, one Brownian channel
  /// G = varpi I, one Poisson channel R = tau I at the given rate, C2 = I.
  static LinearSubsystem integrator(Index n, Matrix C1, double varpi, double tau,
                                    double lambda);

  /// Appends dimension/sign issues to the list; section names the subsystem.
  void validate(const std::string& section, std::vector<std::string>& issues) const;
};

/// Simulation-only escape hatch: arbitrary Lipschitz drift override for one
/// subsystem. Certification rejects networks carrying these.
struct GeneralDrift {
  Index subsystem = 0;
  std::function<Vector(const Vector& x, const Vector& u, const Vector& w)> drift;
};

/// Continuous-time Markov chain over modes {0, ..., P-1} given by its
/// generator matrix: off-diagonal entries are transition rates, rows sum to
/// zero.
struct MarkovChain {
  Matrix Q;

  [[nodiscard]] Index mode_count() const { return Q.rows(); }
  void validate(std::vector<std::string>& issues) const;
};

/// The set of interconnection matrices, one per chain mode. In mode j the
/// stacked internal inputs are w = M_j * (stacked internal outputs).
struct TopologySet {
  std::vector<Matrix> matrices;
};

/// How noise channels stack across subsystems in an interconnected network.
/// kCommon: channel k of every subsystem is driven by one shared scalar
/// process (the interconnection carries a single p-dim Brownian motion and
/// r-dim Poisson process). kPerSubsystem: each subsystem owns independent
/// channels.
enum class NoiseStacking { kCommon, kPerSubsystem };

/// An interconnection of N subsystems whose topology switches with the
/// Markov chain mode.
struct SwitchedNetwork {
  std::vector<LinearSubsystem> subsystems;
  TopologySet topology;
  MarkovChain chain;
  NoiseStacking noise = NoiseStacking::kCommon;
  std::vector<GeneralDrift> drift_overrides;  ///< simulation-only

  [[nodiscard]] Index subsystem_count() const {
    return static_cast<Index>(subsystems.size());
  }
  [[nodiscard]] Index state_dim() const;
  [[nodiscard]] Index input_dim() const;
  [[nodiscard]] Index internal_input_dim() const;
  [[nodiscard]] Index external_output_dim() const;
  [[nodiscard]] Index internal_output_dim() const;

  [[nodiscard]] Index state_offset(Index i) const;
  [[nodiscard]] Index input_offset(Index i) const;

  /// Stacked internal outputs [C2_1 x_1; ...; C2_N x_N].
  [[nodiscard]] Vector internal_outputs(const Vector& x) const;
  /// Stacked external outputs [C1_1 x_1; ...; C1_N x_N].
  [[nodiscard]] Vector external_outputs(const Vector& x) const;

  /// blockdiag(A_i) + blockdiag(D_i) M_mode blockdiag(C2_i); the closed-loop
  /// state matrix of the interconnected drift at a fixed mode.
  [[nodiscard]] Matrix closed_drift_matrix(Index mode) const;
  /// blockdiag(B_i).
  [[nodiscard]] Matrix input_matrix() const;
};

/// Every dimension mismatch and generator violation found in the network;
/// empty report iff all structural invariants hold.
struct ValidationReport {
  struct Issue {
    std::string section;
    std::string message;
  };
  std::vector<Issue> issues;

  [[nodiscard]] bool ok() const { return issues.empty(); }
  [[nodiscard]] std::string text() const;
};

[[nodiscard]] ValidationReport validate_network(const SwitchedNetwork& net);

// =============================================================================
// Certificates
// =============================================================================

/// Per-pair storage certificate relating a subsystem to its abstraction.
/// S(x, xhat) = [x; xhat]' Qs [x; xhat] with decay rate kappa, linear
/// comparison bound alpha_coeff * ||y1 - y1hat||^2 <= S, and the supply-rate
/// data (W, What, H, X blocks). Only the zero external-gain term is
/// supported (psi_ext == 0).
struct StorageCertificate {
  Matrix Qs;
  double kappa = 0.0;
  double alpha_coeff = 0.0;
  Matrix W, What, H;
  Matrix X11, X12, X21, X22;

  [[nodiscard]] double evaluate(const Vector& x, const Vector& xhat) const;
  [[nodiscard]] Matrix x_matrix() const;  ///< assembled [X11 X12; X21 X22]
  void validate(const std::string& section, std::vector<std::string>& issues) const;
};

/// Network-level, mode-indexed certificate V(x, xhat, j) = z' Qv[j] z over
/// the joint state z = [x; xhat].
struct SimulationCertificate {
  std::vector<Matrix> Qv;  ///< one quadratic form per mode
  double kappa = 0.0;
  double alpha_coeff = 0.0;
  Index nx = 0;
  Index nxhat = 0;

  [[nodiscard]] Index mode_count() const { return static_cast<Index>(Qv.size()); }
  [[nodiscard]] double evaluate(const Vector& x, const Vector& xhat, Index mode) const;
};

/// Second-layer certificate data V(xhat, xtilde) = xhat' Q1 xhat +
/// xtilde' Q2 xtilde for the reduced deterministic system. kappa == 0 means
/// no decay rate was declared; the checker then reports generator statistics
/// without asserting a decrease.
struct ReducedCertificate {
  Matrix Q1, Q2;
  double kappa = 0.0;
};

// =============================================================================
// Scenario
// =============================================================================

struct SimulationSettings {
  double dt = 1e-3;
  std::uint64_t seed = 1;

  /// Coupled Monte-Carlo error experiment.
  struct BoundExperiment {
    double horizon = 5.0;
    int runs = 100;
    Vector x0;     ///< concrete initial state (stacked)
    Vector xhat0;  ///< abstract initial state
  } bound;

  /// Controller refinement experiment.
  struct ClosedLoopExperiment {
    double horizon = 60.0;
    Vector x0;
    Vector xhat0;
    Vector xtilde0;
  } closed_loop;
};

struct SynthesisSettings {
  Vector domain_lo, domain_hi;    ///< the safe box S
  Vector target1_lo, target1_hi;  ///< T1
  Vector target2_lo, target2_hi;  ///< T2
  Vector cell_width;              ///< grid eta per dimension
  Vector input_lo, input_hi, input_step;
  double sampling_period = 0.3;
};

/// Everything one run needs: the concrete and abstract networks, the
/// per-pair certificates and composition weights, the interface gain, and
/// simulation/synthesis settings.
struct Scenario {
  std::string name;
  SwitchedNetwork concrete;
  SwitchedNetwork abstraction;
  std::vector<StorageCertificate> certificates;
  Matrix weights;  ///< N x P, entry (i, j) = mu_i^j > 0
  double interface_gain = 1.0;
  SimulationSettings simulation;
  SynthesisSettings synthesis;
  std::optional<ReducedCertificate> reduced_certificate;

  /// blockdiag(H_i) from the certificates: lifts stacked abstract internal
  /// outputs (and, dimensions permitting, abstract inputs) to concrete shape.
  [[nodiscard]] Matrix state_lift() const;
};

/// Parameters of the built-in consensus example: N noisy-integrator blocks,
/// an all-to-all topology and a ring topology switched by a symmetric
/// two-mode chain, scalar abstractions, and the closed-form certificates
/// with kappa = 2 chi - 2 lambda tau - varpi^2 - lambda tau^2.
struct ConsensusScenarioParams {
  Index subsystem_count = 3;
  Index block_dim = 50;
  double varpi = 0.3;
  double tau = 0.03;
  double chi = 1.0;
  double lambda = 10.0;
};

/// Builds the consensus example scenario. Throws std::invalid_argument when
/// chi <= lambda tau + varpi^2/2 + lambda tau^2/2 (the decay rate would be
/// nonpositive) or when parameters are otherwise out of range.
[[nodiscard]] Scenario build_consensus_scenario(const ConsensusScenarioParams& params);

/// All-to-all coupling: -(1/n)(n I - ones); rows sum to zero.
[[nodiscard]] Matrix fully_connected_topology(Index n);
/// Ring coupling: second-difference circulant with -2 diagonal; rows sum to
/// zero.
[[nodiscard]] Matrix cyclic_topology(Index n);

}  // namespace shsnet
