#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace icbp {

// Seeded random stream with platform-independent output.
//
// The engine is std::mt19937_64 (whose output sequence is fixed by the
// standard); all distribution transforms are implemented here because the
// standard library distributions are implementation-defined.  A stream is
// identified by a base seed plus a path of stream ids, e.g.
// {drop, slot, purpose}; distinct paths give statistically independent
// streams.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> stream_ids);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_open_zero() { return 1.0 - uniform(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n) by rejection sampling.
  std::uint64_t below(std::uint64_t n);
  // Standard normal (Box-Muller, cached second variate).
  double normal();
  // Unit-mean exponential.
  double exponential();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace icbp
