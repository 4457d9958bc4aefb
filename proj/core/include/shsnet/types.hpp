#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace shsnet {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Thrown when a simulation run leaves the finite / bounded-state regime.
/// Carries the base-grid step index at which the integrator gave up.
class SimulationAbort : public std::runtime_error {
 public:
  SimulationAbort(std::string what, Index step, double time)
      : std::runtime_error(std::move(what)), step_(step), time_(time) {}

  [[nodiscard]] Index step() const { return step_; }
  [[nodiscard]] double time() const { return time_; }

 private:
  Index step_;
  double time_;
};

/// State-norm ceiling past which the integrator aborts.
inline constexpr double kStateExplosionLimit = 1e12;

}  // namespace shsnet
