#pragma once

// Counter-based random streams. Draw k of stream (seed, name) is
// splitmix64(key + (k + 1) * 0x9E3779B97F4A7C15) with
// key = splitmix64(seed ^ fnv1a64(name)), so any draw can be reproduced
// without replaying the stream. Doubles use the top 53 bits.

#include <cstdint>
#include <limits>
#include <string_view>

namespace stableid {

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::string_view stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller; pairs are consumed two draws at a time).
  double normal();

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stableid
