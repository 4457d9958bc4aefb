// Hot paths: one Euler-Maruyama network step, the closed-form generator,
// successor-box enumeration, and one reach-stay wave on a desk-scale grid.

#include "shsnet/certify.hpp"
#include "shsnet/markov.hpp"
#include "shsnet/model.hpp"
#include "shsnet/sim.hpp"
#include "shsnet/synth.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace shsnet;

void BM_network_step(benchmark::State& state) {
  const auto block = static_cast<Index>(state.range(0));
  const Scenario sc = build_consensus_scenario({.block_dim = block});
  const SwitchSignal signal = frozen_signal(0, 1.0);
  const Vector a = sc.simulation.bound.x0;
  const double dt = 1e-3;
  const Index steps = 100;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    RngStream rng(++seed);
    const Trajectory traj =
        simulate(sc.concrete, zero_controller(sc.concrete.input_dim()), a, signal, dt,
                 dt * static_cast<double>(steps), rng, {.states = false});
    benchmark::DoNotOptimize(traj.final_state);
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_network_step)->Arg(10)->Arg(50);

void BM_generator_quadratic(benchmark::State& state) {
  const Scenario sc = build_consensus_scenario({});
  const auto& cert = sc.certificates[0];
  const auto& sub = sc.concrete.subsystems[0];
  const auto& subh = sc.abstraction.subsystems[0];
  const PairInterface iface{sc.interface_gain, cert.H, cert.H};
  const SubsystemPair pair(sub, subh, iface);
  RngStream rng(3);
  const Vector w = sample_box(sub.p, 10.0, rng);
  const Vector what = sample_box(subh.p, 10.0, rng);
  const Vector uhat = sample_box(subh.m, 10.0, rng);
  const JointLinearSde sde = pair.sde(w, what, uhat);
  const Vector z = sample_box(pair.joint_dim(), 10.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sde.generator(cert.Qs, z).value);
  }
}
BENCHMARK(BM_generator_quadratic);

void BM_successor_boxes(benchmark::State& state) {
  const Scenario sc = build_consensus_scenario({});
  const UniformGrid grid = UniformGrid::make(sc.synthesis.domain_lo,
                                             sc.synthesis.domain_hi,
                                             sc.synthesis.cell_width);
  std::vector<Matrix> modes;
  for (Index j = 0; j < 2; ++j) modes.push_back(sc.abstraction.closed_drift_matrix(j));
  const SymbolicModel model = build_symbolic_model(
      modes, grid, make_input_grid(sc.synthesis.input_lo, sc.synthesis.input_hi,
                                   sc.synthesis.input_step),
      sc.synthesis.sampling_period);
  Index cell = 0;
  for (auto _ : state) {
    const auto succ = model.successors(cell % grid.cell_count(), 1000);
    benchmark::DoNotOptimize(succ);
    cell += 97;
  }
}
BENCHMARK(BM_successor_boxes);

void BM_reach_stay_wave(benchmark::State& state) {
  // desk-scale grid, full input set
  const Vector lo = Vector::Constant(3, -5.0);
  const Vector hi = Vector::Constant(3, 5.0);
  const Vector eta = Vector::Constant(3, 0.5);
  const UniformGrid grid = UniformGrid::make(lo, hi, eta);
  const Scenario sc = build_consensus_scenario({});
  std::vector<Matrix> modes;
  for (Index j = 0; j < 2; ++j) modes.push_back(sc.abstraction.closed_drift_matrix(j));
  const SymbolicModel model =
      build_symbolic_model(modes, grid,
                           make_input_grid(Vector::Constant(3, -3.0),
                                           Vector::Constant(3, 3.0),
                                           Vector::Constant(3, 1.0)),
                           0.3);
  const auto target = grid.mask_of_box(Vector::Constant(3, 1.5), Vector::Constant(3, 2.5));
  const std::vector<std::uint8_t> safe(static_cast<std::size_t>(grid.cell_count()), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(synthesize_reach_stay(model, target, safe).winning_count);
  }
}
BENCHMARK(BM_reach_stay_wave);

}  // namespace

BENCHMARK_MAIN();
