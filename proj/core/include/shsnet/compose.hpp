#pragma once

#include "shsnet/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace shsnet {

/// Interleaved block matrix of weighted certificate X-blocks:
/// [ blkdiag(mu_i X11_i)  blkdiag(mu_i X12_i) ]
/// [ blkdiag(mu_i X21_i)  blkdiag(mu_i X22_i) ]
[[nodiscard]] Matrix assemble_X(const Vector& weights,
                                const std::vector<StorageCertificate>& certs);

/// Forms [W M; I]' X [W M; I], symmetrizes, and returns its maximum
/// eigenvalue; passes iff it does not exceed tol.
struct Condition13Result {
  double max_eigenvalue = 0.0;
  bool pass = false;
};
[[nodiscard]] Condition13Result check_condition_13(const Matrix& W, const Matrix& M,
                                                   const Matrix& X_assembled, double tol);

/// Least-squares solution of W M H = What Mhat for Mhat, with the Frobenius
/// residual. A residual within tol certifies the matching condition exactly;
/// a rank-deficient What is reported rather than silently pseudo-solved.
struct MhatResult {
  Matrix mhat;
  double residual = 0.0;
  bool rank_ok = true;
};
[[nodiscard]] MhatResult compute_Mhat(const Matrix& W, const Matrix& M, const Matrix& H,
                                      const Matrix& What);

/// Residual of one candidate abstract topology: ||W M H - What Mhat||_F.
[[nodiscard]] double validate_Mhat(const Matrix& W, const Matrix& M, const Matrix& H,
                                   const Matrix& What, const Matrix& Mhat);

struct ModeComposition {
  int mode = 0;  ///< 0-based
  double max_eigenvalue_13 = 0.0;
  bool pass_13 = false;
  Matrix mhat_ls;            ///< least-squares abstract interconnection
  double residual_ls = 0.0;  ///< residual of the least-squares solution
  double residual_declared = -1.0;  ///< residual of the declared matrix, -1 if none
  bool pass_14 = false;             ///< residual_ls <= tol
  bool rank_ok = true;
};

struct CompositionReport {
  std::vector<ModeComposition> modes;
  double tol = 1e-9;
  double composed_kappa = 0.0;
  double composed_alpha_coeff = 0.0;

  [[nodiscard]] bool pass() const;
  [[nodiscard]] std::string text() const;
  void write_csv(std::ostream& os) const;  ///< mode,max_eig_13,residual_ls,residual_declared
};

/// Runs conditions (13) and (14) for every mode of the scenario, computing
/// the least-squares abstract interconnection and validating the declared
/// one. Weighted per mode by scenario.weights.
[[nodiscard]] CompositionReport check_composition(const Scenario& scenario, double tol);

/// Network-level certificate V(x, xhat, j) = sum_i mu_i^j S_i(x_i, xhat_i):
/// per-mode quadratic forms scattered over [x; xhat], kappa = min_i kappa_i,
/// composed linear alpha coefficient min_{i,j} (c_i mu_i^j), zero external
/// gain. Throws when any weight is nonpositive, or when the composition
/// report failed and override_failed is false.
[[nodiscard]] SimulationCertificate compose_ssf(const Matrix& weights,
                                                const std::vector<StorageCertificate>& certs,
                                                const SwitchedNetwork& concrete,
                                                const SwitchedNetwork& abstraction,
                                                const CompositionReport& report,
                                                bool override_failed = false);

}  // namespace shsnet
