#pragma once

#include "shsnet/model.hpp"
#include "shsnet/rng.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace shsnet {

/// Theoretical mean-square output-error envelope
///   (1/c) (e^{-kappa t} E[V(a, ahat, pi(0))] + psi_ext(uhat_bound) / kappa)
/// with linear alpha coefficient c. With a zero external gain the curve is
/// (1/c) E[V] e^{-kappa t}: nonincreasing and linear in E[V].
struct ErrorBoundCurve {
  Vector times;
  Vector values;
  double kappa = 0.0;
  double alpha_coeff = 0.0;
  double initial_v = 0.0;  ///< E[V(a, ahat, pi(0))]
};

/// Builds the bound curve. p0 is the initial-mode distribution used to take
/// the expectation of V over pi(0). Throws when kappa <= 0.
[[nodiscard]] ErrorBoundCurve bound_curve(const SimulationCertificate& cert,
                                          const Vector& a, const Vector& ahat,
                                          const Vector& p0, double uhat_bound,
                                          const Vector& time_grid);

/// Empirical mean of ||zeta - zetahat||^2 across coupled runs with pointwise
/// standard errors. Common per-run noise between the concrete and abstract
/// networks, independent noise across runs.
struct EmpiricalCurve {
  Vector times;
  Vector mean;
  Vector std_error;
  Matrix per_run;  ///< grid x runs samples of ||zeta - zetahat||^2
  int runs = 0;
};

/// Runs coupled Monte Carlo from the scenario's bound experiment (initial
/// states, dt, zero abstract input, interface refinement of the concrete
/// input). time_grid entries must lie on the dt grid. Run r uses the
/// substream derived as ("mc-run", r); simulation aborts are rethrown with
/// the run index.
[[nodiscard]] EmpiricalCurve monte_carlo_error(const Scenario& scenario, int runs,
                                               const Vector& time_grid, RngStream root);

/// Grid times where the empirical curve sits above the bound with
/// statistical significance: mean - 2 SE > bound. Empty report means the
/// data are consistent with the envelope.
struct BoundViolationReport {
  std::vector<Index> indices;
  [[nodiscard]] bool empty() const { return indices.empty(); }
  [[nodiscard]] std::string text(const EmpiricalCurve& emp, const ErrorBoundCurve& bound) const;
};

[[nodiscard]] BoundViolationReport compare(const EmpiricalCurve& empirical,
                                           const ErrorBoundCurve& bound);

/// Two-curve CSV: time, empirical mean, standard error, bound.
void write_error_curves_csv(std::ostream& os, const EmpiricalCurve& empirical,
                            const ErrorBoundCurve& bound);

}  // namespace shsnet
