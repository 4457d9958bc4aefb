#include "shsnet/markov.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace shsnet {

int SwitchSignal::mode_at(double t) const {
  if (t < 0.0 || t > horizon) {
    throw std::out_of_range("mode_at: time outside [0, horizon]");
  }
  int mode = initial_mode;
  for (const auto& [tj, mj] : jumps) {
    if (tj <= t) {
      mode = mj;
    } else {
      break;
    }
  }
  return mode;
}

void SwitchSignal::write_csv(std::ostream& os) const {
  os << "time,mode\n";
  os << 0.0 << "," << initial_mode + 1 << "\n";
  for (const auto& [t, m] : jumps) os << t << "," << m + 1 << "\n";
}

SwitchSignal sample_switch_signal(const MarkovChain& chain, int initial_mode,
                                  double horizon, RngStream& rng) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const Index P = chain.mode_count();
  if (initial_mode < 0 || initial_mode >= P) {
    throw std::invalid_argument("initial mode out of range");
  }

  SwitchSignal signal;
  signal.initial_mode = initial_mode;
  signal.horizon = horizon;

  int mode = initial_mode;
  double t = 0.0;
  while (true) {
    const double rate = -chain.Q(mode, mode);
    if (!(rate > 0.0)) break;  // absorbing mode, no further jumps
    t += rng.exponential(rate);
    if (t > horizon) break;  // a jump exactly at the horizon is kept
    double u = rng.uniform() * rate;
    int next = mode;
    double acc = 0.0;
    for (Index j = 0; j < P; ++j) {
      if (j == mode) continue;
      acc += chain.Q(mode, j);
      if (u < acc) {
        next = static_cast<int>(j);
        break;
      }
    }
    if (next == mode) {  // guard against rounding at u == rate
      for (Index j = P - 1; j >= 0; --j) {
        if (j != mode && chain.Q(mode, j) > 0.0) {
          next = static_cast<int>(j);
          break;
        }
      }
    }
    signal.jumps.emplace_back(t, next);
    mode = next;
  }
  return signal;
}

SwitchSignal frozen_signal(int mode, double horizon) {
  SwitchSignal s;
  s.initial_mode = mode;
  s.horizon = horizon;
  return s;
}

double occupancy_fraction(const SwitchSignal& signal, int mode) {
  double occupied = 0.0;
  double t = 0.0;
  int current = signal.initial_mode;
  for (const auto& [tj, mj] : signal.jumps) {
    if (current == mode) occupied += tj - t;
    t = tj;
    current = mj;
  }
  if (current == mode) occupied += signal.horizon - t;
  return occupied / signal.horizon;
}

}  // namespace shsnet
