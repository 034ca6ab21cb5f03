#pragma once

#include <cstdint>

namespace subsamp {

// SplitMix64 stream. Small, fast, splittable: independent streams are derived
// from (base seed, stream id) through the output mixer, so Monte Carlo
// repetitions and sampling phases never share state. All draws are built from
// the raw 64-bit output with fixed arithmetic, which keeps runs bit-for-bit
// reproducible for a given seed regardless of platform libm distributions.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  // Stream for a given purpose within a repetition. Per the sampling
  // contract, repetition streams come from base_seed + repetition_index;
  // purposes (dataset, first capture, per-estimator second captures) get
  // distinct ids underneath.
  static RngStream derive(std::uint64_t base_seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  // Uniform on [0,1), 53-bit resolution.
  double next_double();

  // Uniform on (0,1]; never returns 0 (safe for log()).
  double next_open_double();

  // Standard normal via Box-Muller; second value of each pair is cached.
  double next_normal();

  // Poisson by Knuth's product method; fine for the small means used here.
  std::int64_t next_poisson(double mean);

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace subsamp
