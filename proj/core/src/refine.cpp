#include "shsnet/refine.hpp"

#include "shsnet/markov.hpp"

#include <cmath>
#include <stdexcept>

namespace shsnet {

Vector InterfaceMap::apply(const Vector& x, const Vector& xhat, const Vector& uhat) const {
  if (layer == InterfaceLayer::kAbstractFromReduced) {
    return interface_reduced(x, xhat, uhat, gain);
  }
  return interface_concrete(x, xhat, uhat, gain, lift);
}

Vector interface_concrete(const Vector& x, const Vector& xhat, const Vector& uhat,
                          double gain, const Matrix& lift) {
  if (lift.rows() != x.size() || lift.cols() != xhat.size() || lift.cols() != uhat.size()) {
    throw std::invalid_argument("interface_concrete: dimension mismatch");
  }
  return -gain * (x - lift * xhat) + lift * uhat;
}

Vector interface_reduced(const Vector& xhat, const Vector& xtilde, const Vector& utilde,
                         double gain) {
  if (xhat.size() != xtilde.size() || xhat.size() != utilde.size()) {
    throw std::invalid_argument("interface_reduced: dimension mismatch");
  }
  return -gain * (xhat - xtilde) + utilde;
}

Vector refined_input(const Vector& x, const Vector& xhat, const Vector& xtilde,
                     const Vector& utilde, double gain, const Matrix& lift) {
  return interface_concrete(x, xhat, interface_reduced(xhat, xtilde, utilde, gain), gain,
                            lift);
}

// ---------------------------------------------------------------------------
// RefinedController
// ---------------------------------------------------------------------------

RefinedController::RefinedController(const ControllerTable& table, double gain,
                                     Matrix lift, std::vector<Matrix> reduced_modes,
                                     Matrix reduced_input_map, const SwitchSignal* signal,
                                     Vector xtilde0, double dt, double sampling_period)
    : table_(&table),
      gain_(gain),
      lift_(std::move(lift)),
      reduced_modes_(std::move(reduced_modes)),
      reduced_input_map_(std::move(reduced_input_map)),
      signal_(signal),
      xtilde_(std::move(xtilde0)),
      dt_(dt) {
  const double per = sampling_period / dt;
  steps_per_period_ = static_cast<Index>(std::llround(per));
  if (steps_per_period_ < 1 ||
      std::abs(per - static_cast<double>(steps_per_period_)) > 1e-6) {
    throw std::invalid_argument(
        "refined controller: sampling period must be a multiple of dt");
  }
  utilde_ = Vector::Zero(xtilde_.size());
  sup_norm_ = xtilde_.cwiseAbs().maxCoeff();
}

Vector RefinedController::abstract_input(double t, const Vector& xhat) {
  if (step_ % steps_per_period_ == 0) {
    const Index cell = table_->grid.cell_of(xtilde_);
    const auto decision = table_->decide(cell, memory_);
    // the entered target is the one that was active before the toggle
    if (decision.entered_target) visits_.push_back({t, memory_});
    memory_ = decision.memory;
    if (decision.input_index < 0) {
      if (!exit_time_) exit_time_ = t;
      utilde_.setZero();
    } else {
      utilde_ = table_->inputs[static_cast<std::size_t>(decision.input_index)];
    }
  }
  const Vector uhat = interface_reduced(xhat, xtilde_, utilde_, gain_);
  trace_.push_back(xtilde_);

  // advance the reduced layer by one grid step (mode held over the step)
  const int mode = signal_->mode_at(std::min(t, signal_->horizon));
  const Matrix& A = reduced_modes_[static_cast<std::size_t>(mode)];
  xtilde_ += dt_ * (A * xtilde_ + reduced_input_map_ * utilde_);
  sup_norm_ = std::max(sup_norm_, xtilde_.cwiseAbs().maxCoeff());
  ++step_;
  return uhat;
}

std::unique_ptr<RefinedController> make_refined_controller(const ControllerTable& table,
                                                           const Scenario& scenario,
                                                           const SwitchSignal* signal) {
  std::vector<Matrix> reduced_modes;
  for (Index j = 0; j < scenario.abstraction.chain.mode_count(); ++j) {
    reduced_modes.push_back(scenario.abstraction.closed_drift_matrix(j));
  }
  return std::make_unique<RefinedController>(
      table, scenario.interface_gain, scenario.state_lift(), std::move(reduced_modes),
      scenario.abstraction.input_matrix(), signal,
      scenario.simulation.closed_loop.xtilde0, scenario.simulation.dt,
      scenario.synthesis.sampling_period);
}

ClosedLoopResult run_refined_closed_loop(const Scenario& scenario,
                                         const ControllerTable& table, std::uint64_t seed,
                                         RecordOptions opts) {
  const double dt = scenario.simulation.dt;
  const double horizon = scenario.simulation.closed_loop.horizon;
  RngStream root(seed);
  RngStream switch_stream = root.derive("switch");
  const SwitchSignal signal =
      horizon > 0.0 ? sample_switch_signal(scenario.concrete.chain, 0, horizon,
                                           switch_stream)
                    : frozen_signal(0, 0.0);

  auto controller = make_refined_controller(table, scenario, &signal);
  const Matrix lift = scenario.state_lift();
  const double gain = scenario.interface_gain;
  const InterfaceFn iface = [&](const Vector& x, const Vector& xh, const Vector& uh) {
    return interface_concrete(x, xh, uh, gain, lift);
  };
  const Controller abstract_controller = [&](double t, const Vector& xh) {
    return controller->abstract_input(t, xh);
  };

  auto [concrete, abstraction] = simulate_coupled(
      scenario.concrete, scenario.abstraction, iface, abstract_controller,
      scenario.simulation.closed_loop.x0, scenario.simulation.closed_loop.xhat0, signal,
      dt, horizon, root.derive("coupled"), opts);

  ClosedLoopResult result;
  const auto& trace = controller->reduced_trace();
  result.reduced_states.resize(static_cast<Index>(trace.size()),
                               scenario.abstraction.state_dim());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    result.reduced_states.row(static_cast<Index>(k)) = trace[k].transpose();
  }
  result.visits = controller->visits();
  result.domain_exit_time = controller->domain_exit_time();
  result.sup_reduced_norm_inf = controller->sup_reduced_norm_inf();
  result.concrete = std::move(concrete);
  result.abstraction = std::move(abstraction);
  return result;
}

}  // namespace shsnet
