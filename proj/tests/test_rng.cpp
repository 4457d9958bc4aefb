#include "shsnet/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <vector>

using namespace shsnet;

TEST_CASE("identical seeds reproduce identical streams") {
  RngStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("derivation is independent of consumption") {
  RngStream a(7);
  RngStream b(7);
  (void)a.next_u64();
  (void)a.normal();
  // children depend only on the parent seed and the label
  RngStream ca = a.derive("child", 3);
  RngStream cb = b.derive("child", 3);
  for (int i = 0; i < 100; ++i) CHECK(ca.next_u64() == cb.next_u64());
}

TEST_CASE("distinct labels and indices give distinct streams") {
  RngStream root(1);
  RngStream a = root.derive("x", 0);
  RngStream b = root.derive("x", 1);
  RngStream c = root.derive("y", 0);
  CHECK(a.next_u64() != b.next_u64());
  CHECK(a.seed() != c.seed());
}

TEST_CASE("normal moments") {
  RngStream rng(123);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("exponential mean") {
  RngStream rng(5);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.exponential(0.5);
  CHECK(std::abs(sum / n - 2.0) < 0.05);
}

TEST_CASE("uniform range") {
  RngStream rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-3.0, 2.0);
    CHECK(u >= -3.0);
    CHECK(u < 2.0);
  }
}
