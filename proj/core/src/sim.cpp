#include "shsnet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace shsnet {

Controller zero_controller(Index m) {
  return [m](double, const Vector&) { return Vector::Zero(m).eval(); };
}

Controller constant_controller(Vector u) {
  return [u = std::move(u)](double, const Vector&) { return u; };
}

// ---------------------------------------------------------------------------
// Channel layout
// ---------------------------------------------------------------------------

Index ChannelLayout::brownian_group(Index subsystem, Index channel) const {
  if (stacking == NoiseStacking::kCommon) return channel;
  return brownian_offset[static_cast<std::size_t>(subsystem)] + channel;
}

Index ChannelLayout::poisson_group(Index subsystem, Index channel) const {
  if (stacking == NoiseStacking::kCommon) return channel;
  return poisson_offset[static_cast<std::size_t>(subsystem)] + channel;
}

ChannelLayout ChannelLayout::of(const SwitchedNetwork& net) {
  ChannelLayout layout;
  layout.stacking = net.noise;
  if (net.subsystems.empty()) return layout;

  if (net.noise == NoiseStacking::kCommon) {
    const auto& first = net.subsystems.front();
    for (const auto& s : net.subsystems) {
      if (s.brownian_channels() != first.brownian_channels() ||
          s.poisson_channels() != first.poisson_channels()) {
        throw std::invalid_argument(
            "common noise stacking requires equal channel counts across subsystems");
      }
      if (s.rates.size() == first.rates.size() && s.rates != first.rates) {
        throw std::invalid_argument(
            "common noise stacking requires equal jump rates across subsystems");
      }
    }
    layout.brownian_groups = first.brownian_channels();
    layout.poisson_groups = first.poisson_channels();
    layout.group_rates = first.rates;
  } else {
    Index bo = 0, po = 0;
    std::vector<double> rates;
    for (const auto& s : net.subsystems) {
      layout.brownian_offset.push_back(bo);
      layout.poisson_offset.push_back(po);
      bo += s.brownian_channels();
      po += s.poisson_channels();
      for (Index k = 0; k < s.rates.size(); ++k) rates.push_back(s.rates[k]);
    }
    layout.brownian_groups = bo;
    layout.poisson_groups = po;
    layout.group_rates = Eigen::Map<Vector>(rates.data(), static_cast<Index>(rates.size()));
  }
  return layout;
}

void ChannelLayout::require_shared(const ChannelLayout& a, const ChannelLayout& b) {
  if (a.stacking != b.stacking || a.brownian_groups != b.brownian_groups ||
      a.poisson_groups != b.poisson_groups) {
    throw std::invalid_argument(
        "coupled simulation requires shared noise channels: the two networks "
        "must declare the same stacking and channel group counts");
  }
  if (a.group_rates.size() != b.group_rates.size() || a.group_rates != b.group_rates) {
    throw std::invalid_argument(
        "coupled simulation requires identical jump rates per shared channel group");
  }
  if (a.stacking == NoiseStacking::kPerSubsystem &&
      (a.brownian_offset != b.brownian_offset || a.poisson_offset != b.poisson_offset)) {
    throw std::invalid_argument(
        "coupled simulation requires aligned per-subsystem channel offsets");
  }
}

// ---------------------------------------------------------------------------
// Noise sampling
// ---------------------------------------------------------------------------

namespace {

Index validated_step_count(double dt, double horizon) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (horizon < 0.0) throw std::invalid_argument("horizon must be nonnegative");
  const double steps = horizon / dt;
  const auto rounded = static_cast<Index>(std::llround(steps));
  if (std::abs(steps - static_cast<double>(rounded)) > 1e-6) {
    throw std::invalid_argument("horizon must be a multiple of dt (within one step)");
  }
  return rounded;
}

}  // namespace

NoiseRecord sample_noise(const ChannelLayout& layout, const SwitchSignal& signal,
                         double dt, double horizon, RngStream rng) {
  NoiseRecord record;
  const Index steps = validated_step_count(dt, horizon);

  // exact jump times per poisson group
  for (Index g = 0; g < layout.poisson_groups; ++g) {
    const double rate = layout.group_rates[g];
    if (!(rate > 0.0)) continue;
    RngStream stream = rng.derive("poisson", static_cast<std::uint64_t>(g));
    double t = 0.0;
    while (true) {
      t += stream.exponential(rate);
      if (t > horizon) break;
      record.jumps.push_back({t, g});
    }
  }
  std::sort(record.jumps.begin(), record.jumps.end(),
            [](const NoiseRecord::Jump& a, const NoiseRecord::Jump& b) {
              return a.time < b.time;
            });

  // merged grid: base points, jump times, switch times
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps) + record.jumps.size() +
               signal.jumps.size() + 2);
  for (Index k = 0; k < steps; ++k) grid.push_back(static_cast<double>(k) * dt);
  grid.push_back(horizon);
  for (const auto& j : record.jumps) grid.push_back(j.time);
  for (const auto& [ts, m] : signal.jumps) {
    if (ts <= horizon) grid.push_back(ts);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  record.grid = std::move(grid);

  // brownian increments per merged subinterval
  record.dW.resize(static_cast<std::size_t>(layout.brownian_groups));
  const std::size_t intervals = record.grid.size() - 1;
  for (Index g = 0; g < layout.brownian_groups; ++g) {
    RngStream stream = rng.derive("brownian", static_cast<std::uint64_t>(g));
    auto& inc = record.dW[static_cast<std::size_t>(g)];
    inc.resize(intervals);
    for (std::size_t k = 0; k < intervals; ++k) {
      inc[k] = stream.normal() * std::sqrt(record.grid[k + 1] - record.grid[k]);
    }
  }
  return record;
}

// ---------------------------------------------------------------------------
// Integration core
// ---------------------------------------------------------------------------

namespace {

// Per-network stepping state over the merged grid.
struct Stepper {
  const SwitchedNetwork* net;
  ChannelLayout layout;
  Vector x;
  Vector u;        // held external input
  Vector scratch;  // next state
  Vector w;        // internal inputs
  Vector z2;       // internal outputs
  std::vector<const GeneralDrift*> override_of;

  Stepper(const SwitchedNetwork& n, Vector x0) : net(&n), layout(ChannelLayout::of(n)) {
    x = std::move(x0);
    if (x.size() != n.state_dim()) {
      throw std::invalid_argument("initial state dimension mismatch");
    }
    u = Vector::Zero(n.input_dim());
    scratch.resize(x.size());
    z2.resize(n.internal_output_dim());
    w.resize(n.internal_input_dim());
    override_of.assign(n.subsystems.size(), nullptr);
    for (const auto& ov : n.drift_overrides) {
      if (ov.subsystem >= 0 && ov.subsystem < static_cast<Index>(override_of.size())) {
        override_of[static_cast<std::size_t>(ov.subsystem)] = &ov;
      }
    }
  }

  void euler_step(double delta, int mode, const std::vector<std::vector<double>>& dW,
                  std::size_t interval) {
    const auto& subs = net->subsystems;
    // stacked internal outputs and inputs
    Index xo = 0, zo = 0;
    for (const auto& s : subs) {
      z2.segment(zo, s.q2).noalias() = s.C2 * x.segment(xo, s.n);
      xo += s.n;
      zo += s.q2;
    }
    const Matrix& M = net->topology.matrices[static_cast<std::size_t>(mode)];
    w.noalias() = M * z2;

    xo = 0;
    Index uo = 0, wo = 0;
    for (std::size_t i = 0; i < subs.size(); ++i) {
      const auto& s = subs[i];
      auto xi = x.segment(xo, s.n);
      auto out = scratch.segment(xo, s.n);
      if (override_of[i] != nullptr) {
        out = xi + delta * override_of[i]->drift(xi, u.segment(uo, s.m), w.segment(wo, s.p));
      } else {
        out = xi + delta * (s.A * xi + s.B * u.segment(uo, s.m) + s.D * w.segment(wo, s.p));
      }
      for (Index k = 0; k < s.brownian_channels(); ++k) {
        const Index g = layout.brownian_group(static_cast<Index>(i), k);
        out.noalias() += dW[static_cast<std::size_t>(g)][interval] *
                         (s.diffusion[static_cast<std::size_t>(k)] * xi);
      }
      xo += s.n;
      uo += s.m;
      wo += s.p;
    }
    x.swap(scratch);
  }

  void apply_jump(Index group) {
    const auto& subs = net->subsystems;
    Index xo = 0;
    for (std::size_t i = 0; i < subs.size(); ++i) {
      const auto& s = subs[i];
      for (Index k = 0; k < s.poisson_channels(); ++k) {
        if (layout.poisson_group(static_cast<Index>(i), k) == group) {
          auto xi = x.segment(xo, s.n);
          xi += s.resets[static_cast<std::size_t>(k)] * xi;
        }
      }
      xo += s.n;
    }
  }

  void check_finite(Index base_step, double t) const {
    if (!x.allFinite() || x.norm() > kStateExplosionLimit) {
      throw SimulationAbort("state explosion at step " + std::to_string(base_step) +
                                " (t = " + std::to_string(t) + ")",
                            base_step, t);
    }
  }
};

struct Recorder {
  RecordOptions opts;
  Trajectory traj;
  Index row = 0;

  Recorder(const SwitchedNetwork& net, const SwitchSignal& signal, Index steps,
           RecordOptions o)
      : opts(o) {
    traj.times.resize(steps + 1);
    traj.modes.resize(static_cast<std::size_t>(steps) + 1);
    traj.outputs.resize(steps + 1, net.external_output_dim());
    if (opts.states) traj.states.resize(steps + 1, net.state_dim());
    if (opts.internal_outputs) {
      traj.internal_outputs.resize(steps + 1, net.internal_output_dim());
    }
    traj.signal = signal;
  }

  void record(const SwitchedNetwork& net, double t, int mode, const Vector& x) {
    traj.times[row] = t;
    traj.modes[static_cast<std::size_t>(row)] = mode;
    traj.outputs.row(row) = net.external_outputs(x).transpose();
    if (opts.states) traj.states.row(row) = x.transpose();
    if (opts.internal_outputs) {
      traj.internal_outputs.row(row) = net.internal_outputs(x).transpose();
    }
    ++row;
  }

  Trajectory finish(const Vector& x) && {
    traj.final_state = x;
    return std::move(traj);
  }
};

// Shared driver for single and coupled integration. `steppers` advance in
// lockstep on the merged grid; controllers are refreshed (zero-order hold)
// at base grid points only.
template <typename HoldFn, typename RecordFn>
void drive(const NoiseRecord& noise, const SwitchSignal& signal, double dt,
           double horizon, Index steps, std::vector<Stepper*>& steppers,
           HoldFn&& refresh_inputs, RecordFn&& record) {
  // base grid points appear in the merged grid bit-exactly; mark them
  std::vector<std::uint8_t> is_base(noise.grid.size(), 0);
  {
    std::size_t cursor = 0;
    for (Index k = 0; k <= steps; ++k) {
      const double tb = (k == steps) ? horizon : static_cast<double>(k) * dt;
      while (cursor < noise.grid.size() && noise.grid[cursor] < tb) ++cursor;
      if (cursor < noise.grid.size() && noise.grid[cursor] == tb) is_base[cursor] = 1;
    }
  }

  std::size_t jump_cursor = 0;
  std::size_t switch_cursor = 0;
  int mode = signal.initial_mode;
  Index base_step = 0;

  refresh_inputs(0.0, base_step);
  record(0.0, mode);

  for (std::size_t k = 0; k + 1 < noise.grid.size(); ++k) {
    const double t0 = noise.grid[k];
    const double t1 = noise.grid[k + 1];
    const double delta = t1 - t0;
    for (auto* s : steppers) s->euler_step(delta, mode, noise.dW, k);
    // exact jump times land on grid points; apply resets on arrival at t1
    while (jump_cursor < noise.jumps.size() && noise.jumps[jump_cursor].time <= t1) {
      for (auto* s : steppers) s->apply_jump(noise.jumps[jump_cursor].group);
      ++jump_cursor;
    }
    for (auto* s : steppers) s->check_finite(base_step, t1);
    // cadlag: switches at t1 affect the next interval and the recorded mode
    while (switch_cursor < signal.jumps.size() &&
           signal.jumps[switch_cursor].first <= t1) {
      mode = signal.jumps[switch_cursor].second;
      ++switch_cursor;
    }
    if (is_base[k + 1]) {
      ++base_step;
      refresh_inputs(t1, base_step);
      record(t1, mode);
    }
  }
}

}  // namespace

Trajectory simulate_with_noise(const SwitchedNetwork& net, const Controller& controller,
                               const Vector& a, const SwitchSignal& signal, double dt,
                               double horizon, const NoiseRecord& noise,
                               RecordOptions opts) {
  const Index steps = validated_step_count(dt, horizon);
  if (signal.horizon < horizon) {
    throw std::invalid_argument("switch signal horizon shorter than simulation horizon");
  }
  Stepper stepper(net, a);
  Recorder recorder(net, signal, steps, opts);
  std::vector<Stepper*> list{&stepper};
  drive(
      noise, signal, dt, horizon, steps, list,
      [&](double t, Index) { stepper.u = controller(t, stepper.x); },
      [&](double t, int mode) { recorder.record(net, t, mode, stepper.x); });
  return std::move(recorder).finish(stepper.x);
}

Trajectory simulate(const SwitchedNetwork& net, const Controller& controller,
                    const Vector& a, const SwitchSignal& signal, double dt, double horizon,
                    RngStream rng, RecordOptions opts) {
  const auto layout = ChannelLayout::of(net);
  const NoiseRecord noise = sample_noise(layout, signal, dt, horizon, rng.derive("noise"));
  return simulate_with_noise(net, controller, a, signal, dt, horizon, noise, opts);
}

std::pair<Trajectory, Trajectory> simulate_coupled(
    const SwitchedNetwork& concrete, const SwitchedNetwork& abstraction,
    const InterfaceFn& interface_map, const Controller& abstract_controller,
    const Vector& a, const Vector& ahat, const SwitchSignal& signal, double dt,
    double horizon, RngStream rng, RecordOptions opts) {
  const Index steps = validated_step_count(dt, horizon);
  if (signal.horizon < horizon) {
    throw std::invalid_argument("switch signal horizon shorter than simulation horizon");
  }
  const auto layout_c = ChannelLayout::of(concrete);
  const auto layout_a = ChannelLayout::of(abstraction);
  ChannelLayout::require_shared(layout_c, layout_a);

  const NoiseRecord noise =
      sample_noise(layout_c, signal, dt, horizon, rng.derive("noise"));

  Stepper sc(concrete, a);
  Stepper sa(abstraction, ahat);
  Recorder rc(concrete, signal, steps, opts);
  Recorder ra(abstraction, signal, steps, opts);
  std::vector<Stepper*> list{&sc, &sa};
  drive(
      noise, signal, dt, horizon, steps, list,
      [&](double t, Index) {
        sa.u = abstract_controller(t, sa.x);
        sc.u = interface_map(sc.x, sa.x, sa.u);
      },
      [&](double t, int mode) {
        rc.record(concrete, t, mode, sc.x);
        ra.record(abstraction, t, mode, sa.x);
      });
  return {std::move(rc).finish(sc.x), std::move(ra).finish(sa.x)};
}

void Trajectory::write_csv(std::ostream& os, bool with_states) const {
  os << "time,mode";
  for (Index j = 0; j < outputs.cols(); ++j) os << ",y" << (j + 1);
  const bool dump_states = with_states && states.size() > 0;
  if (dump_states) {
    for (Index j = 0; j < states.cols(); ++j) os << ",x" << (j + 1);
  }
  os << "\n";
  for (Index k = 0; k < times.size(); ++k) {
    os << times[k] << "," << modes[static_cast<std::size_t>(k)] + 1;
    for (Index j = 0; j < outputs.cols(); ++j) os << "," << outputs(k, j);
    if (dump_states) {
      for (Index j = 0; j < states.cols(); ++j) os << "," << states(k, j);
    }
    os << "\n";
  }
}

}  // namespace shsnet
