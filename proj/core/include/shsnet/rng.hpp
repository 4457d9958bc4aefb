#pragma once

#include <cstdint>
#include <string_view>

namespace shsnet {

/// Counter-style random stream with named derivation.
///
/// Every consumer of randomness receives its own stream derived from the
/// root seed by hashing a label path, e.g.
///   root.derive("mc-run", r).derive("channel", k)
/// Derivation depends only on the parent's seed, never on how many values
/// the parent has produced, so parallel workers and partial re-runs see
/// identical streams. Output generation is a xoshiro256** engine with a
/// portable Box-Muller normal transform (no reliance on libstdc++
/// distribution internals).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Independent child stream for a named purpose.
  [[nodiscard]] RngStream derive(std::string_view label) const;
  [[nodiscard]] RngStream derive(std::string_view label, std::uint64_t index) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [a, b).
  double uniform(double a, double b);
  /// Standard normal.
  double normal();
  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate);

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace shsnet
