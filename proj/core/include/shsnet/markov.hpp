#pragma once

#include "shsnet/model.hpp"
#include "shsnet/rng.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace shsnet {

/// One realization of the switching process: piecewise constant, right
/// continuous, finitely many jumps on the horizon. Modes are 0-based in
/// code; serialized CSV uses 1-based mode numbers.
struct SwitchSignal {
  int initial_mode = 0;
  std::vector<std::pair<double, int>> jumps;  ///< (time, new mode), strictly increasing
  double horizon = 0.0;

  /// Cadlag evaluation: at a jump time the new mode is returned.
  /// Throws std::out_of_range outside [0, horizon].
  [[nodiscard]] int mode_at(double t) const;

  [[nodiscard]] std::size_t jump_count() const { return jumps.size(); }

  void write_csv(std::ostream& os) const;  ///< columns: time,mode
};

/// Exact holding-time sampling of the chain: the stay in mode i is
/// exponential with rate -Q(i,i) and the next mode j != i is picked with
/// probability Q(i,j)/(-Q(i,i)). An absorbing mode (zero diagonal) ends the
/// jump sequence. A jump landing exactly on the horizon is kept.
[[nodiscard]] SwitchSignal sample_switch_signal(const MarkovChain& chain, int initial_mode,
                                                double horizon, RngStream& rng);

/// Convenience: the signal that stays in one mode forever.
[[nodiscard]] SwitchSignal frozen_signal(int mode, double horizon);

/// Fraction of time spent in the given mode.
[[nodiscard]] double occupancy_fraction(const SwitchSignal& signal, int mode);

}  // namespace shsnet
