#pragma once

#include <cstdint>

#include "subsamp/design.hpp"

namespace subsamp {

// Precision requirement: an MSE bound (R1, constant c0) or an absolute-error
// coverage requirement (R2, radius d at confidence 1-a).
struct PrecisionSpec {
  enum class Kind { R1, R2 };
  Kind kind = Kind::R1;
  double c0 = 0.0;
  double d = 0.0;
  double a = 0.05;
  static PrecisionSpec mse(double c0) { return {Kind::R1, c0, 0.0, 0.0}; }
  static PrecisionSpec abserr(double d, double a) {
    return {Kind::R2, 0.0, d, a};
  }
};

struct SizeResult {
  double n0 = 0.0;        // ideal total size (expected sum of phi)
  double r_second = 0.0;  // N (n0 - r0) / (N - r0)
  double nu_star = 0.0;   // effective scale parameter at the root (R2 only)
  bool has_nu_star = false;
  int iterations = 0;
  bool clipped = false;
};

struct SizingContext {
  PilotContext pilot;
  std::int64_t n_total = 0;  // N
  double alpha10 = 0.0;      // r0 / N
};

// Quantile of the chi-square distribution with real-valued nu > 0 degrees of
// freedom, by Newton inversion of the regularized incomplete gamma function.
double chi2_quantile(double nu, double p);

// M1: damped fixed point of n0 = (1/c0) {m^-1 sum ||a_j - K b_j||}^2, where
// the b-vectors and K depend on alpha0 = n0/N. Result clipped to
// [r0+1, N-1] with the clipped flag set.
SizeResult size_m1(const SizingContext& ctx, double c0);

// M2: smallest n0 whose pilot plug-in ELW variance satisfies the weighted
// chi-square coverage approximation
//   nu(n0) * N * d^2 = chi2_{k(n0)}(1-a),
// with nu = sum(lambda)/sum(lambda^2) and degrees of freedom
// k = (sum(lambda))^2 / sum(lambda^2) from the eigenvalues lambda of the
// plug-in ELW covariance. Monotonicity of the left side in n0 is verified;
// a grid scan takes over when it fails.
SizeResult size_m2(const SizingContext& ctx, double d, double a);

SizeResult determine_size(const SizingContext& ctx, const PrecisionSpec& spec);

// Inverts the M2 coverage equation at a given size: the radius d whose M2
// solution is n0 (used to build requirement grids spanning a size range).
double m2_radius_for_size(const SizingContext& ctx, double n0, double a);

}  // namespace subsamp
