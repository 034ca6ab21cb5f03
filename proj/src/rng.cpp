#include "subsamp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace subsamp {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream RngStream::derive(std::uint64_t base_seed, std::uint64_t stream_id) {
  // Two mixing rounds decorrelate adjacent (seed, id) pairs.
  std::uint64_t s = mix64(base_seed + kGolden * (stream_id + 1));
  return RngStream(mix64(s + kGolden));
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_open_double() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  const double u1 = next_open_double();
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  cached_ = radius * std::sin(angle);
  have_cached_ = true;
  return radius * std::cos(angle);
}

std::int64_t RngStream::next_poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean))
    throw std::invalid_argument("poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= next_open_double();
    } while (prod > limit);
    return k - 1;
  }
  // Split large means; each half stays in the product-method range.
  const double half = mean / 2.0;
  return next_poisson(half) + next_poisson(mean - half);
}

}  // namespace subsamp
