#include "subsamp/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>

namespace subsamp::kernels {

namespace {

double s_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double s_dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double s_dot3(const double* w, const double* x, const double* y,
              std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i] * y[i];
  return acc;
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void s_accum_sq(const double* x, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] = acc[i] + x[i] * x[i];
}

void s_reciprocal(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / x[i];
}

void s_clip_probs(const double* u, double scale, double lo, double* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::max(lo, std::min(scale * u[i], 1.0));
}

double s_clipped_mean(const double* u, double scale, double lo,
                      std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += std::max(lo, std::min(scale * u[i], 1.0));
  return acc / static_cast<double>(n);
}

const Ops kScalar = {s_sum,        s_dot,        s_dot3,
                     s_axpy,       s_accum_sq,   s_reciprocal,
                     s_clip_probs, s_clipped_mean, "scalar"};

std::atomic<const Ops*> g_active{nullptr};

const Ops* pick(Mode mode) {
  switch (mode) {
    case Mode::Scalar:
      return &kScalar;
    case Mode::Avx2:
      if (!avx2_available())
        throw std::runtime_error("AVX2 kernels requested but not supported");
      return &avx2_ops();
    case Mode::Auto:
    default:
      return avx2_available() ? &avx2_ops() : &kScalar;
  }
}

}  // namespace

const Ops& scalar_ops() { return kScalar; }

const Ops& active() {
  const Ops* ops = g_active.load(std::memory_order_acquire);
  if (ops == nullptr) {
    ops = pick(Mode::Auto);
    g_active.store(ops, std::memory_order_release);
  }
  return *ops;
}

void set_mode(Mode mode) {
  g_active.store(pick(mode), std::memory_order_release);
}

#ifndef SUBSAMP_HAVE_AVX2
bool avx2_available() { return false; }
const Ops& avx2_ops() {
  throw std::runtime_error("built without AVX2 support");
}
#endif

}  // namespace subsamp::kernels
