#include "shsnet/markov.hpp"

#include "doctest.h"

#include <cmath>
#include <sstream>

using namespace shsnet;

namespace {

MarkovChain symmetric_chain(double rate) {
  MarkovChain chain;
  chain.Q.resize(2, 2);
  chain.Q << -rate, rate, rate, -rate;
  return chain;
}

}  // namespace

TEST_CASE("zero generator yields no jumps") {
  MarkovChain chain;
  chain.Q = Matrix::Zero(2, 2);
  RngStream rng(1);
  const SwitchSignal signal = sample_switch_signal(chain, 0, 100.0, rng);
  CHECK(signal.jump_count() == 0);
  CHECK(signal.mode_at(50.0) == 0);
}

TEST_CASE("mean holding time of the rate-0.5 chain is 2.0") {
  const MarkovChain chain = symmetric_chain(0.5);
  RngStream rng(2024);
  double total = 0.0;
  long holds = 0;
  for (int rep = 0; rep < 10; ++rep) {
    RngStream stream = rng.derive("signal", rep);
    const SwitchSignal signal = sample_switch_signal(chain, 0, 2100.0, stream);
    double last = 0.0;
    for (const auto& [t, m] : signal.jumps) {
      total += t - last;
      last = t;
      ++holds;
    }
  }
  REQUIRE(holds > 9000);  // about 10 * 1050 complete holds
  const double mean = total / static_cast<double>(holds);
  CHECK(mean == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("occupancy of the symmetric chain is close to one half") {
  const MarkovChain chain = symmetric_chain(0.5);
  RngStream rng(7);
  const SwitchSignal signal = sample_switch_signal(chain, 0, 1e4, rng);
  const double occ = occupancy_fraction(signal, 0);
  CHECK(occ > 0.45);
  CHECK(occ < 0.55);
}

TEST_CASE("mode_at is cadlag") {
  SwitchSignal signal;
  signal.initial_mode = 0;
  signal.horizon = 5.0;
  signal.jumps = {{1.0, 1}, {2.5, 0}};
  CHECK(signal.mode_at(0.5) == 0);   // before the first jump
  CHECK(signal.mode_at(1.0) == 1);   // exactly at a jump: the new mode
  CHECK(signal.mode_at(1.7) == 1);   // piecewise-constant lookup
  CHECK(signal.mode_at(2.5) == 0);
  CHECK(signal.mode_at(5.0) == 0);
  CHECK_THROWS_AS((void)signal.mode_at(-0.1), std::out_of_range);
  CHECK_THROWS_AS((void)signal.mode_at(5.1), std::out_of_range);
}

TEST_CASE("identical seeds produce identical signals bit for bit") {
  const MarkovChain chain = symmetric_chain(0.5);
  RngStream a(99), b(99);
  const SwitchSignal sa = sample_switch_signal(chain, 0, 100.0, a);
  const SwitchSignal sb = sample_switch_signal(chain, 0, 100.0, b);
  REQUIRE(sa.jump_count() == sb.jump_count());
  for (std::size_t k = 0; k < sa.jumps.size(); ++k) {
    CHECK(sa.jumps[k].first == sb.jumps[k].first);
    CHECK(sa.jumps[k].second == sb.jumps[k].second);
  }
}

TEST_CASE("embedded-chain transition frequencies match the generator") {
  // three modes, asymmetric rates out of mode 0
  MarkovChain chain;
  chain.Q.resize(3, 3);
  chain.Q << -1.0, 0.75, 0.25, 0.5, -0.5, 0.0, 0.4, 0.6, -1.0;
  RngStream rng(31);
  long from0 = 0, to1 = 0;
  for (int rep = 0; rep < 20; ++rep) {
    RngStream stream = rng.derive("signal", rep);
    const SwitchSignal signal = sample_switch_signal(chain, 0, 500.0, stream);
    int mode = 0;
    for (const auto& [t, m] : signal.jumps) {
      if (mode == 0) {
        ++from0;
        if (m == 1) ++to1;
      }
      mode = m;
    }
  }
  REQUIRE(from0 > 1000);
  const double p = static_cast<double>(to1) / static_cast<double>(from0);
  const double expected = 0.75;
  const double sigma = std::sqrt(expected * (1.0 - expected) / static_cast<double>(from0));
  CHECK(std::abs(p - expected) < 3.0 * sigma);
}

TEST_CASE("signal serializes to time,mode csv with 1-based modes") {
  SwitchSignal signal;
  signal.initial_mode = 0;
  signal.horizon = 2.0;
  signal.jumps = {{0.5, 1}};
  std::ostringstream os;
  signal.write_csv(os);
  CHECK(os.str() == "time,mode\n0,1\n0.5,2\n");
}
