#pragma once

#include "shsnet/model.hpp"
#include "shsnet/rng.hpp"

#include <string>
#include <vector>

namespace shsnet {

/// Value of the infinitesimal generator applied to a quadratic form at one
/// point, with its additive breakdown. value == drift + diffusion + jump.
struct GeneratorResult {
  double value = 0.0;
  double drift_term = 0.0;
  double diffusion_term = 0.0;
  double jump_term = 0.0;
};

/// Generator of S(z) = z' Qs z along a jump diffusion, evaluated at `point`:
///   grad S . f  +  sum_k s_k' Qs s_k  +  sum_k rate_k (S(z + d_k) - S(z))
/// where f is the drift vector, s_k the diffusion columns, and d_k the jump
/// displacements, all evaluated at the point.
[[nodiscard]] GeneratorResult lgen_quadratic(const Matrix& Qs, const Vector& drift,
                                             const std::vector<Vector>& diffusion_columns,
                                             const std::vector<Vector>& jump_displacements,
                                             const Vector& rates, const Vector& point);

/// Joint affine jump-diffusion dz = (F z + g) dt + sum_k (G_k z) dW_k
/// + sum_k (R_k z) dP_k. The closed form every certificate computation runs
/// against; also simulatable (dynkin_oracle).
struct JointLinearSde {
  Matrix F;
  Vector g;
  std::vector<Matrix> G;
  std::vector<Matrix> R;
  Vector rates;

  [[nodiscard]] GeneratorResult generator(const Matrix& Qs, const Vector& z) const;
};

/// Refinement interface u = -gain (x - state_lift xhat) + input_lift uhat.
struct PairInterface {
  double gain = 1.0;
  Matrix state_lift;
  Matrix input_lift;

  [[nodiscard]] Vector apply(const Vector& x, const Vector& xhat,
                             const Vector& uhat) const {
    return -gain * (x - state_lift * xhat) + input_lift * uhat;
  }
};

/// A concrete subsystem, its abstraction, and the interface, with shared
/// noise channels (equal channel counts and rates are required). Produces
/// the joint SDE of [x; xhat] for frozen internal/abstract inputs.
class SubsystemPair {
 public:
  SubsystemPair(LinearSubsystem concrete, LinearSubsystem abstraction,
                PairInterface iface);

  [[nodiscard]] const LinearSubsystem& concrete() const { return concrete_; }
  [[nodiscard]] const LinearSubsystem& abstraction() const { return abstraction_; }
  [[nodiscard]] const PairInterface& interface_map() const { return iface_; }
  [[nodiscard]] Index joint_dim() const { return concrete_.n + abstraction_.n; }

  [[nodiscard]] JointLinearSde sde(const Vector& w, const Vector& what,
                                   const Vector& uhat) const;

 private:
  LinearSubsystem concrete_;
  LinearSubsystem abstraction_;
  PairInterface iface_;
  Matrix feedback_drift_;  // joint drift matrix with the interface folded in
};

// ---------------------------------------------------------------------------
// Sampled checks
// ---------------------------------------------------------------------------

struct CheckOptions {
  long samples = 10000;
  double radius = 10.0;  ///< componentwise uniform sampling in [-radius, radius]
  double tol = 1e-9;     ///< margin below -tol counts as a violation
};

struct Witness {
  Vector x, xhat, uhat, w, what;
  int mode = -1;
  double margin = 0.0;
};

struct CheckReport {
  std::string name;
  long samples = 0;
  long violations = 0;
  double worst_margin = 0.0;  ///< minimum slack over all samples
  std::vector<Witness> witnesses;  ///< worst offenders, capped

  [[nodiscard]] bool pass() const { return violations == 0; }
  [[nodiscard]] std::string text() const;
};

/// Samples (x, xhat, uhat, w, what) and asserts the dissipation inequality
///   L S <= -kappa S + psi_ext(|uhat|^2) + supply' X supply
/// with the existential input discharged by the interface. Margin is the
/// right-hand side minus L S.
[[nodiscard]] CheckReport check_storage_inequality(const StorageCertificate& cert,
                                                   const LinearSubsystem& concrete,
                                                   const LinearSubsystem& abstraction,
                                                   const PairInterface& iface,
                                                   const CheckOptions& opts,
                                                   RngStream rng);

/// Samples (x, xhat) and asserts alpha_coeff ||C1 x - C1hat xhat||^2 <= S.
[[nodiscard]] CheckReport check_alpha_bound(const StorageCertificate& cert,
                                            const LinearSubsystem& concrete,
                                            const LinearSubsystem& abstraction,
                                            const CheckOptions& opts, RngStream rng);

/// Per-mode check of L V <= -kappa V for the interconnected pair with
/// internal inputs closed by the topologies; samples (x, xhat, uhat).
/// Returns one report per mode. Violation sets can be thin (low-dimensional
/// cones); a clean sampled report is evidence, not proof. See
/// simulation_margin_at for directed witnesses.
[[nodiscard]] std::vector<CheckReport> check_simulation_inequality(
    const SimulationCertificate& cert, const SwitchedNetwork& concrete,
    const SwitchedNetwork& abstraction, const PairInterface& network_interface,
    const CheckOptions& opts, RngStream rng);

/// Slack of the mode-j decrease inequality at one joint point, with the
/// interface discharging the input: -kappa V - L V. Negative values witness
/// a failure of the certificate at that point.
[[nodiscard]] double simulation_margin_at(const SimulationCertificate& cert,
                                          const SwitchedNetwork& concrete,
                                          const SwitchedNetwork& abstraction,
                                          const PairInterface& network_interface,
                                          const Vector& x, const Vector& xhat,
                                          const Vector& uhat, Index mode);

/// Informational check of the second-layer certificate V(xhat, xtilde) =
/// xhat' Q1 xhat + xtilde' Q2 xtilde against the deterministic reduction of
/// the abstraction (diffusion and resets zeroed), with utilde = 0. When no
/// decay rate is declared (kappa == 0) the margin is plain -L V.
[[nodiscard]] CheckReport check_reduced_certificate(const ReducedCertificate& cert,
                                                    const SwitchedNetwork& abstraction,
                                                    double gain, const CheckOptions& opts,
                                                    RngStream rng);

// ---------------------------------------------------------------------------
// Independent oracle
// ---------------------------------------------------------------------------

struct DynkinEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long runs = 0;
};

/// Monte-Carlo estimate (E[S(Z_delta)] - S(z)) / delta of the generator by
/// simulating the joint SDE from the point, with `substeps` Euler substeps
/// per run. Independent of lgen_quadratic's closed form.
[[nodiscard]] DynkinEstimate dynkin_oracle(const Matrix& Qs, const JointLinearSde& sde,
                                           const Vector& point, double delta = 1e-3,
                                           long runs = 10000, RngStream rng = RngStream(0),
                                           int substeps = 4);

/// Componentwise uniform sample in [-radius, radius]^dim.
[[nodiscard]] Vector sample_box(Index dim, double radius, RngStream& rng);

}  // namespace shsnet
