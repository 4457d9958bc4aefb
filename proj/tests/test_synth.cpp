#include "shsnet/synth.hpp"

#include "shsnet/model.hpp"
#include "shsnet/rng.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

using namespace shsnet;

namespace {

UniformGrid line_grid(double lo, double hi, double eta) {
  return UniformGrid::make(Vector::Constant(1, lo), Vector::Constant(1, hi),
                           Vector::Constant(1, eta));
}

std::vector<Vector> scalar_inputs(std::initializer_list<double> values) {
  std::vector<Vector> out;
  for (double v : values) out.push_back(Vector::Constant(1, v));
  return out;
}

// brute-force transition lists materialized through the public successor API
using Graph = std::vector<std::vector<std::optional<std::vector<Index>>>>;

Graph materialize(const SymbolicModel& model) {
  Graph g(static_cast<std::size_t>(model.grid.cell_count()));
  for (Index c = 0; c < model.grid.cell_count(); ++c) {
    for (Index u = 0; u < model.input_count(); ++u) {
      g[static_cast<std::size_t>(c)].push_back(model.successors(c, u));
    }
  }
  return g;
}

// reference fixpoint on the explicit graph
std::vector<std::uint8_t> bfs_winning(const Graph& g,
                                      const std::vector<std::uint8_t>& target,
                                      const std::vector<std::uint8_t>& safe) {
  std::vector<std::uint8_t> win = target;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t c = 0; c < g.size(); ++c) {
      if (win[c] || !safe[c]) continue;
      for (const auto& succ : g[c]) {
        if (!succ) continue;
        const bool all_in = std::all_of(succ->begin(), succ->end(), [&](Index s) {
          return win[static_cast<std::size_t>(s)] != 0;
        });
        if (all_in) {
          win[c] = 1;
          changed = true;
          break;
        }
      }
    }
  }
  return win;
}

}  // namespace

TEST_CASE("grid construction validates corner alignment") {
  CHECK_THROWS_AS((void)line_grid(-1.0, 1.0, 0.3), std::invalid_argument);
  const UniformGrid grid = line_grid(-1.0, 1.0, 0.5);
  CHECK(grid.cell_count() == 4);
  CHECK(grid.cell_of(Vector::Constant(1, -0.9)) == 0);
  CHECK(grid.cell_of(Vector::Constant(1, 0.9)) == 3);
  CHECK(grid.cell_of(Vector::Constant(1, 1.5)) == -1);
  CHECK(grid.center(1)[0] == doctest::Approx(-0.25));
}

TEST_CASE("box masks resolve grid-aligned targets exactly") {
  const UniformGrid grid = UniformGrid::make(Vector::Constant(3, -5.0),
                                             Vector::Constant(3, 5.0),
                                             Vector::Constant(3, 0.2));
  const auto mask = grid.mask_of_box(Vector::Constant(3, 1.6), Vector::Constant(3, 2.4));
  Index count = 0;
  for (auto b : mask) count += b;
  CHECK(count == 64);  // 4 cells per dimension
  CHECK(mask[static_cast<std::size_t>(grid.cell_of(Vector::Constant(3, 2.0)))] == 1);
  CHECK(mask[static_cast<std::size_t>(grid.cell_of(Vector::Constant(3, 1.5)))] == 0);
}

TEST_CASE("input grid enumerates the product lattice") {
  const auto inputs = make_input_grid(Vector::Constant(3, -3.0),
                                      Vector::Constant(3, 3.0),
                                      Vector::Constant(3, 0.5));
  CHECK(inputs.size() == 13 * 13 * 13);
  const auto small = make_input_grid(Vector::Constant(1, -1.0),
                                     Vector::Constant(1, 1.0),
                                     Vector::Constant(1, 1.0));
  CHECK(small.size() == 3);
}

TEST_CASE("zero dynamics map every cell to itself") {
  const UniformGrid grid = line_grid(-1.0, 1.0, 0.5);
  const SymbolicModel model =
      build_symbolic_model({Matrix::Zero(1, 1)}, grid, scalar_inputs({0.0}), 0.1);
  for (Index c = 0; c < grid.cell_count(); ++c) {
    const auto succ = model.successors(c, 0);
    REQUIRE(succ.has_value());
    REQUIRE(succ->size() == 1);
    CHECK((*succ)[0] == c);
  }
}

TEST_CASE("contractive line successors match the interval oracle") {
  // x' = -x + u on [-1, 1], eta 0.5, tau 0.1
  const double tau = 0.1, eta = 0.5, lo = -1.0;
  const UniformGrid grid = line_grid(-1.0, 1.0, eta);
  const auto inputs = scalar_inputs({-1.0, -0.5, 0.0, 0.5, 1.0});
  const SymbolicModel model =
      build_symbolic_model({-Matrix::Identity(1, 1)}, grid, inputs, tau);

  // oracle computed through scalar arithmetic only
  const double phi = std::exp(-tau);
  const double gamma = 1.0 - std::exp(-tau);
  const double radius = std::exp(tau) * (eta / 2.0);
  for (Index c = 0; c < grid.cell_count(); ++c) {
    const double center = lo + (static_cast<double>(c) + 0.5) * eta;
    for (Index u = 0; u < static_cast<Index>(inputs.size()); ++u) {
      const double next = phi * center + gamma * inputs[static_cast<std::size_t>(u)][0];
      const double a = (next - radius - lo) / eta;
      const double b = (next + radius - lo) / eta;
      const auto first = static_cast<Index>(std::floor(a));
      const auto last = static_cast<Index>(std::ceil(b)) - 1;
      const auto succ = model.successors(c, u);
      if (first < 0 || last >= grid.cell_count()) {
        CHECK_FALSE(succ.has_value());
        continue;
      }
      REQUIRE(succ.has_value());
      std::vector<Index> expected;
      for (Index k = first; k <= last; ++k) expected.push_back(k);
      CHECK(*succ == expected);
    }
  }
}

TEST_CASE("reach-while-stay winning set matches the graph oracle") {
  const UniformGrid grid = line_grid(-1.0, 1.0, 0.25);
  const auto inputs = scalar_inputs({-1.0, -0.5, 0.0, 0.5, 1.0});
  const SymbolicModel model =
      build_symbolic_model({-Matrix::Identity(1, 1)}, grid, inputs, 0.1);
  std::vector<std::uint8_t> target(static_cast<std::size_t>(grid.cell_count()), 0);
  target[3] = target[4] = 1;  // middle cells
  const std::vector<std::uint8_t> safe(static_cast<std::size_t>(grid.cell_count()), 1);

  const ReachStayResult result = synthesize_reach_stay(model, target, safe);
  const auto oracle = bfs_winning(materialize(model), target, safe);
  CHECK(result.winning == oracle);

  // the recorded witnesses are valid: all successors stay winning
  for (Index c = 0; c < grid.cell_count(); ++c) {
    if (!result.winning[static_cast<std::size_t>(c)]) continue;
    const auto u = result.input_of[static_cast<std::size_t>(c)];
    if (u < 0) continue;
    const auto succ = model.successors(c, u);
    REQUIRE(succ.has_value());
    for (Index s : *succ) CHECK(result.winning[static_cast<std::size_t>(s)] == 1);
  }
}

TEST_CASE("closed-loop symbolic runs stay safe and reach the target") {
  const UniformGrid grid = line_grid(-1.0, 1.0, 0.25);
  const auto inputs = scalar_inputs({-1.0, -0.5, 0.0, 0.5, 1.0});
  const SymbolicModel model =
      build_symbolic_model({-Matrix::Identity(1, 1)}, grid, inputs, 0.1);
  std::vector<std::uint8_t> target(static_cast<std::size_t>(grid.cell_count()), 0);
  target[3] = target[4] = 1;
  const std::vector<std::uint8_t> safe(static_cast<std::size_t>(grid.cell_count()), 1);
  const ReachStayResult result = synthesize_reach_stay(model, target, safe);

  // exhaustive run over all nondeterministic branches from every winning cell
  for (Index start = 0; start < grid.cell_count(); ++start) {
    if (!result.winning[static_cast<std::size_t>(start)]) continue;
    std::set<Index> frontier{start};
    bool reached = target[static_cast<std::size_t>(start)] != 0;
    for (Index step = 0; step < result.winning_count && !reached; ++step) {
      std::set<Index> next;
      reached = true;
      for (Index c : frontier) {
        if (target[static_cast<std::size_t>(c)]) continue;
        reached = false;
        const auto u = result.input_of[static_cast<std::size_t>(c)];
        REQUIRE(u >= 0);
        const auto succ = model.successors(c, u);
        REQUIRE(succ.has_value());
        for (Index s : *succ) {
          CHECK(result.winning[static_cast<std::size_t>(s)] == 1);  // stays safe
          next.insert(s);
        }
      }
      frontier.swap(next);
    }
    CHECK(reached);
  }
}

TEST_CASE("empty target wins nothing, full target wins everything") {
  const UniformGrid grid = line_grid(-1.0, 1.0, 0.5);
  const SymbolicModel model =
      build_symbolic_model({-Matrix::Identity(1, 1)}, grid, scalar_inputs({0.0}), 0.1);
  const std::vector<std::uint8_t> safe(4, 1);
  const std::vector<std::uint8_t> none(4, 0);
  CHECK(synthesize_reach_stay(model, none, safe).winning_count == 0);
  const std::vector<std::uint8_t> all(4, 1);
  const ReachStayResult full = synthesize_reach_stay(model, all, all);
  CHECK(full.winning_count == 4);
  CHECK(full.iterations == 1);
}

TEST_CASE("enlarging the input grid never shrinks the winning set") {
  const UniformGrid grid = line_grid(-2.0, 2.0, 0.25);
  std::vector<std::uint8_t> target(static_cast<std::size_t>(grid.cell_count()), 0);
  target[7] = target[8] = 1;
  const std::vector<std::uint8_t> safe(static_cast<std::size_t>(grid.cell_count()), 1);
  const SymbolicModel coarse =
      build_symbolic_model({-Matrix::Identity(1, 1)}, grid, scalar_inputs({-1.0, 0.0, 1.0}),
                           0.2);
  const SymbolicModel fine = build_symbolic_model(
      {-Matrix::Identity(1, 1)}, grid, scalar_inputs({-1.0, -0.5, 0.0, 0.5, 1.0}), 0.2);
  const auto wc = synthesize_reach_stay(coarse, target, safe);
  const auto wf = synthesize_reach_stay(fine, target, safe);
  for (std::size_t c = 0; c < wc.winning.size(); ++c) {
    if (wc.winning[c]) CHECK(wf.winning[c] == 1);
  }
}

TEST_CASE("true flow endpoints lie inside the successor boxes") {
  const Scenario sc = build_consensus_scenario({.block_dim = 4});
  const UniformGrid grid = UniformGrid::make(Vector::Constant(3, -5.0),
                                             Vector::Constant(3, 5.0),
                                             Vector::Constant(3, 0.5));
  std::vector<Matrix> modes;
  for (Index j = 0; j < 2; ++j) modes.push_back(sc.abstraction.closed_drift_matrix(j));
  const auto inputs = make_input_grid(Vector::Constant(3, -3.0), Vector::Constant(3, 3.0),
                                      Vector::Constant(3, 1.0));
  const SymbolicModel model = build_symbolic_model(modes, grid, inputs, 0.3);
  RngStream rng(7);
  Vector blo(3), bhi(3);
  for (int trial = 0; trial < 300; ++trial) {
    Vector x(3);
    for (Index k = 0; k < 3; ++k) x[k] = rng.uniform(-4.9, 4.9);
    const Index cell = grid.cell_of(x);
    const auto u = static_cast<Index>(rng.next_u64() % inputs.size());
    const auto mode = static_cast<Index>(rng.next_u64() % 2);
    const Vector endpoint = model.flow[static_cast<std::size_t>(mode)] * x +
                            model.inject[static_cast<std::size_t>(mode)] *
                                inputs[static_cast<std::size_t>(u)];
    model.successor_box(cell, u, mode, blo, bhi);
    for (Index k = 0; k < 3; ++k) {
      CHECK(endpoint[k] >= blo[k] - 1e-12);
      CHECK(endpoint[k] <= bhi[k] + 1e-12);
    }
  }
}

TEST_CASE("identical targets reduce the supervisor to a single recurrence") {
  const UniformGrid grid = line_grid(-1.0, 1.0, 0.25);
  const auto inputs = scalar_inputs({-1.0, -0.5, 0.0, 0.5, 1.0});
  const SymbolicModel model =
      build_symbolic_model({-Matrix::Identity(1, 1)}, grid, inputs, 0.1);
  std::vector<std::uint8_t> target(static_cast<std::size_t>(grid.cell_count()), 0);
  target[3] = target[4] = 1;
  const std::vector<std::uint8_t> safe(static_cast<std::size_t>(grid.cell_count()), 1);
  const auto r = synthesize_reach_stay(model, target, safe);
  const ControllerTable table = build_recurrence_supervisor(model, r, r, target, target);
  // entering the (shared) target toggles every time but stays controlled
  const auto d = table.decide(3, 0);
  CHECK(d.entered_target);
  CHECK(d.memory == 1);
  CHECK(d.input_index >= 0);
}

TEST_CASE("an unreachable second target fails the supervisor precondition") {
  // no input authority at all: only the target itself is winning
  const UniformGrid grid = line_grid(-1.0, 1.0, 0.25);
  const SymbolicModel model =
      build_symbolic_model({-Matrix::Identity(1, 1)}, grid, scalar_inputs({0.0}), 0.05);
  std::vector<std::uint8_t> t1(static_cast<std::size_t>(grid.cell_count()), 0);
  std::vector<std::uint8_t> t2(static_cast<std::size_t>(grid.cell_count()), 0);
  t1[0] = 1;
  t2[7] = 1;
  const std::vector<std::uint8_t> safe(static_cast<std::size_t>(grid.cell_count()), 1);
  auto r1 = synthesize_reach_stay(model, t1, safe);
  auto r2 = synthesize_reach_stay(model, t2, safe);
  CHECK_THROWS_WITH_AS((void)build_recurrence_supervisor(model, r1, r2, t1, t2),
                       doctest::Contains("uncovered cells"), std::invalid_argument);
}

TEST_CASE("the origin cell forwards into its own successor set at rest") {
  // the all-to-all abstraction keeps 0 fixed, so the box around the flowed
  // center must still cover the starting cell
  const Scenario sc = build_consensus_scenario({.block_dim = 4});
  const UniformGrid grid = UniformGrid::make(Vector::Constant(3, -5.0),
                                             Vector::Constant(3, 5.0),
                                             Vector::Constant(3, 0.2));
  std::vector<Matrix> modes = {sc.abstraction.closed_drift_matrix(0)};
  const SymbolicModel model =
      build_symbolic_model(modes, grid, {Vector::Zero(3)}, 0.3);
  const Index origin = grid.cell_of(Vector::Constant(3, 0.1));
  const auto succ = model.successors(origin, 0);
  REQUIRE(succ.has_value());
  CHECK(std::find(succ->begin(), succ->end(), origin) != succ->end());
}
