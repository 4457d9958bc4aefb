#pragma once

#include "shsnet/markov.hpp"
#include "shsnet/model.hpp"
#include "shsnet/rng.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace shsnet {

/// External-input policy, sampled zero-order-hold at the integration grid.
using Controller = std::function<Vector(double t, const Vector& x)>;

[[nodiscard]] Controller zero_controller(Index m);
[[nodiscard]] Controller constant_controller(Vector u);

/// Resolved noise-channel layout of a network: which (subsystem, local
/// channel) pairs share one driving process. With common stacking the
/// interconnection carries a single channel group per local channel index;
/// with per-subsystem stacking every subsystem owns its channels.
struct ChannelLayout {
  NoiseStacking stacking = NoiseStacking::kCommon;
  Index brownian_groups = 0;
  Index poisson_groups = 0;
  std::vector<Index> brownian_offset;  ///< per subsystem (per-subsystem stacking)
  std::vector<Index> poisson_offset;
  Vector group_rates;  ///< jump rate per poisson group

  [[nodiscard]] Index brownian_group(Index subsystem, Index channel) const;
  [[nodiscard]] Index poisson_group(Index subsystem, Index channel) const;

  /// Throws std::invalid_argument on inconsistent channel counts or rates.
  static ChannelLayout of(const SwitchedNetwork& net);
  /// Coupled simulation requires both networks to resolve to identical
  /// channel groups (shared Brownian/Poisson processes); throws otherwise.
  static void require_shared(const ChannelLayout& a, const ChannelLayout& b);
};

/// Sampled driving noise on the merged integration grid: Brownian increments
/// per channel group per subinterval, and the exact Poisson jump times.
struct NoiseRecord {
  std::vector<double> grid;  ///< merged times: base grid + jump times + switch times
  std::vector<std::vector<double>> dW;  ///< [group][interval], N(0, dt_interval)
  struct Jump {
    double time;
    Index group;
  };
  std::vector<Jump> jumps;  ///< sorted by time
};

/// Samples jump times first (exponential interarrivals per group), merges
/// them with the base grid and the switch times, then draws Brownian
/// increments per merged subinterval.
[[nodiscard]] NoiseRecord sample_noise(const ChannelLayout& layout,
                                       const SwitchSignal& signal, double dt,
                                       double horizon, RngStream rng);

struct RecordOptions {
  bool states = true;
  bool internal_outputs = false;
};

struct Trajectory {
  Vector times;            ///< base grid
  std::vector<int> modes;  ///< mode at each base time (cadlag)
  Matrix states;           ///< (K+1) x n when recorded, else empty
  Matrix outputs;          ///< (K+1) x q1, rows are C1-stacked outputs
  Matrix internal_outputs;
  Vector final_state;
  SwitchSignal signal;

  /// Columns: time, mode, then one named column per external output;
  /// full state columns appended when requested and recorded.
  void write_csv(std::ostream& os, bool with_states = false) const;
};

/// Euler-Maruyama integration of the interconnected network under the given
/// switching signal. Poisson resets are applied at their exact sampled jump
/// times (the integration grid is refined to include them, as well as the
/// switch times). The internal input stack is w = M_mode (stacked C2 x) with
/// the mode taken from the signal. Aborts with SimulationAbort when the
/// state leaves the finite / bounded regime.
[[nodiscard]] Trajectory simulate(const SwitchedNetwork& net, const Controller& controller,
                                  const Vector& a, const SwitchSignal& signal, double dt,
                                  double horizon, RngStream rng, RecordOptions opts = {});

/// Same, driven by a prebuilt noise record (its grid must have been built
/// for this dt/horizon/signal combination).
[[nodiscard]] Trajectory simulate_with_noise(const SwitchedNetwork& net,
                                             const Controller& controller, const Vector& a,
                                             const SwitchSignal& signal, double dt,
                                             double horizon, const NoiseRecord& noise,
                                             RecordOptions opts = {});

/// Refinement map: concrete input from (x, xhat, uhat).
using InterfaceFn =
    std::function<Vector(const Vector& x, const Vector& xhat, const Vector& uhat)>;

/// Coupled simulation of a concrete network and its abstraction: both are
/// driven by the identical noise record per shared channel group and by the
/// identical switching signal; the concrete input at each grid step is
/// produced by the interface from (x, xhat, uhat). The two networks must
/// declare shared channels (ChannelLayout::require_shared).
[[nodiscard]] std::pair<Trajectory, Trajectory> simulate_coupled(
    const SwitchedNetwork& concrete, const SwitchedNetwork& abstraction,
    const InterfaceFn& interface_map, const Controller& abstract_controller,
    const Vector& a, const Vector& ahat, const SwitchSignal& signal, double dt,
    double horizon, RngStream rng, RecordOptions opts = {});

}  // namespace shsnet
