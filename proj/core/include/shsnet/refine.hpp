#pragma once

#include "shsnet/model.hpp"
#include "shsnet/sim.hpp"
#include "shsnet/synth.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace shsnet {

enum class InterfaceLayer { kConcreteFromAbstract, kAbstractFromReduced };

/// Refinement interface for one abstraction layer:
/// u = -gain (x - lift xhat) + lift uhat. The reduced layer uses an identity
/// lift.
struct InterfaceMap {
  double gain = 1.0;
  Matrix lift;
  InterfaceLayer layer = InterfaceLayer::kConcreteFromAbstract;

  [[nodiscard]] Vector apply(const Vector& x, const Vector& xhat,
                             const Vector& uhat) const;
};

/// u = -gain (x - lift xhat) + lift uhat, stacked across subsystems.
[[nodiscard]] Vector interface_concrete(const Vector& x, const Vector& xhat,
                                        const Vector& uhat, double gain,
                                        const Matrix& lift);

/// uhat = -gain (xhat - xtilde) + utilde (same dimension on both sides).
[[nodiscard]] Vector interface_reduced(const Vector& xhat, const Vector& xtilde,
                                       const Vector& utilde, double gain);

/// Both layers chained: u = -gain (x - L xhat) + L (-gain (xhat - xtilde) + utilde).
[[nodiscard]] Vector refined_input(const Vector& x, const Vector& xhat,
                                   const Vector& xtilde, const Vector& utilde,
                                   double gain, const Matrix& lift);

struct VisitEvent {
  double time = 0.0;
  int target = 0;  ///< 0: first target, 1: second target
};

/// Supervisor-driven reduced layer carried inside the closed loop: holds and
/// integrates its own copy of the reduced state, evaluates the controller
/// table at each sampling instant, chains both interface layers, and logs
/// target visits. Full-state feedback; every layer's state is available by
/// construction.
class RefinedController {
 public:
  RefinedController(const ControllerTable& table, double gain, Matrix lift,
                    std::vector<Matrix> reduced_modes, Matrix reduced_input_map,
                    const SwitchSignal* signal, Vector xtilde0, double dt,
                    double sampling_period);

  /// Abstract-layer control uhat(t, xhat); called once per integration grid
  /// point, in order. Advances the internal reduced state by one dt step.
  Vector abstract_input(double t, const Vector& xhat);

  [[nodiscard]] const std::vector<VisitEvent>& visits() const { return visits_; }
  [[nodiscard]] std::optional<double> domain_exit_time() const { return exit_time_; }
  [[nodiscard]] const std::vector<Vector>& reduced_trace() const { return trace_; }
  [[nodiscard]] double sup_reduced_norm_inf() const { return sup_norm_; }

 private:
  const ControllerTable* table_;
  double gain_;
  Matrix lift_;
  std::vector<Matrix> reduced_modes_;
  Matrix reduced_input_map_;
  const SwitchSignal* signal_;
  Vector xtilde_;
  Vector utilde_;
  double dt_;
  Index steps_per_period_;
  Index step_ = 0;
  int memory_ = 0;
  std::vector<VisitEvent> visits_;
  std::optional<double> exit_time_;
  std::vector<Vector> trace_;
  double sup_norm_ = 0.0;
};

/// Builds the supervisor-driven controller for the scenario's closed-loop
/// experiment.
[[nodiscard]] std::unique_ptr<RefinedController> make_refined_controller(
    const ControllerTable& table, const Scenario& scenario, const SwitchSignal* signal);

struct ClosedLoopResult {
  Trajectory concrete;
  Trajectory abstraction;
  Matrix reduced_states;  ///< (K+1) x nhat
  std::vector<VisitEvent> visits;
  std::optional<double> domain_exit_time;
  double sup_reduced_norm_inf = 0.0;
};

/// Simulates the refined closed loop: the reduced layer under the table's
/// supervisor, the abstract network driven through the reduced interface,
/// and the concrete network driven through the concrete interface, all three
/// sharing the switching signal (and the two stochastic layers sharing
/// noise).
[[nodiscard]] ClosedLoopResult run_refined_closed_loop(const Scenario& scenario,
                                                       const ControllerTable& table,
                                                       std::uint64_t seed,
                                                       RecordOptions opts = {});

}  // namespace shsnet
