#pragma once

#include <cstddef>

// Streaming array kernels used by the estimation hot paths (weighted Gram
// matrices, residual norms, probability clipping). A scalar reference
// implementation always exists; on x86-64 an AVX2 variant is selected at
// runtime when the CPU supports it. Elementwise kernels produce bit-identical
// results in both variants; reductions may differ by accumulation order and
// are equivalence-tested under a small relative tolerance.
namespace subsamp::kernels {

struct Ops {
  // sum of x[0..n)
  double (*sum)(const double* x, std::size_t n);
  // sum of x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum of w[i]*x[i]*y[i]
  double (*dot3)(const double* w, const double* x, const double* y,
                 std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // acc[i] += x[i]*x[i]
  void (*accum_sq)(const double* x, double* acc, std::size_t n);
  // out[i] = 1/x[i]
  void (*reciprocal)(const double* x, double* out, std::size_t n);
  // out[i] = max(lo, min(scale*u[i], 1))
  void (*clip_probs)(const double* u, double scale, double lo, double* out,
                     std::size_t n);
  // mean over i of max(lo, min(scale*u[i], 1))
  double (*clipped_mean)(const double* u, double scale, double lo,
                         std::size_t n);
  const char* name;
};

enum class Mode { Auto, Scalar, Avx2 };

const Ops& scalar_ops();
bool avx2_available();
const Ops& avx2_ops();  // valid only when avx2_available()

// The active table, chosen once at first use (Auto) or forced via set_mode.
const Ops& active();
void set_mode(Mode mode);

}  // namespace subsamp::kernels
