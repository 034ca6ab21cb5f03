// AVX2 variants of the streaming kernels. This translation unit is compiled
// with -mavx2 -mfma and only on x86-64; dispatch happens in kernels.cpp.
//
// Reductions keep four independent lanes and fold at the end, so their
// rounding differs from the scalar reference. Elementwise kernels use plain
// mul/add (no FMA contraction) and match the scalar results bit for bit.

#include "subsamp/kernels.hpp"

#ifdef SUBSAMP_HAVE_AVX2

#include <immintrin.h>

#include <algorithm>

namespace subsamp::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double a_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double a_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

double a_dot3(const double* w, const double* x, const double* y,
              std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wx = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
    acc = _mm256_fmadd_pd(wx, _mm256_loadu_pd(y + i), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += w[i] * x[i] * y[i];
  return total;
}

void a_axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void a_accum_sq(const double* x, double* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d sq = _mm256_mul_pd(vx, vx);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), sq));
  }
  for (; i < n; ++i) acc[i] = acc[i] + x[i] * x[i];
}

void a_reciprocal(const double* x, double* out, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_div_pd(one, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = 1.0 / x[i];
}

inline __m256d clip4(__m256d u, __m256d scale, __m256d lo, __m256d one) {
  return _mm256_max_pd(lo, _mm256_min_pd(_mm256_mul_pd(scale, u), one));
}

void a_clip_probs(const double* u, double scale, double lo, double* out,
                  std::size_t n) {
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d vl = _mm256_set1_pd(lo);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, clip4(_mm256_loadu_pd(u + i), vs, vl, one));
  for (; i < n; ++i) out[i] = std::max(lo, std::min(scale * u[i], 1.0));
}

double a_clipped_mean(const double* u, double scale, double lo,
                      std::size_t n) {
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d vl = _mm256_set1_pd(lo);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, clip4(_mm256_loadu_pd(u + i), vs, vl, one));
  double total = hsum(acc);
  for (; i < n; ++i) total += std::max(lo, std::min(scale * u[i], 1.0));
  return total / static_cast<double>(n);
}

const Ops kAvx2 = {a_sum,        a_dot,        a_dot3,
                   a_axpy,       a_accum_sq,   a_reciprocal,
                   a_clip_probs, a_clipped_mean, "avx2"};

}  // namespace

bool avx2_available() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const Ops& avx2_ops() { return kAvx2; }

}  // namespace subsamp::kernels

#endif  // SUBSAMP_HAVE_AVX2
