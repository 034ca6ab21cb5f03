#include "subsamp/sizing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "subsamp/estimators.hpp"
#include "subsamp/kernels.hpp"
#include "subsamp/math_special.hpp"

namespace subsamp {

double chi2_quantile(double nu, double p) {
  if (!(nu > 0.0)) throw std::invalid_argument("chi2_quantile: nu must be > 0");
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("chi2_quantile: p must lie in (0,1)");
  const double a = 0.5 * nu;

  // Wilson-Hilferty starting point, clipped to a positive value.
  const double z = [&] {
    // Acklam-style rational approximation of the normal quantile is overkill
    // here; a coarse start suffices for the safeguarded Newton below.
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }();
  const double wh = 1.0 - 2.0 / (9.0 * nu) + z * std::sqrt(2.0 / (9.0 * nu));
  double x = nu * wh * wh * wh;
  if (!(x > 0.0) || !std::isfinite(x)) x = nu;

  // Safeguarded Newton on F(x) = gamma_p(a, x/2) - p. F is increasing, so a
  // bisection bracket keeps each step sane for extreme nu.
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const double f = gamma_p(a, 0.5 * x) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    // density of chi2_nu at x
    const double log_pdf = (a - 1.0) * std::log(0.5 * x) - 0.5 * x -
                           std::lgamma(a) - std::log(2.0);
    const double pdf = std::exp(log_pdf);
    double next = (pdf > 0.0 && std::isfinite(pdf)) ? x - f / pdf : x;
    if (!(next > lo && next < hi) || !std::isfinite(next))
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * (lo + 1.0);
    if (std::fabs(next - x) <= 1e-10 * std::max(1e-300, std::fabs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

namespace {

// Mean residual norm of the pilot at a candidate alpha0.
double mean_norm_at(const PilotContext& pilot, double alpha0) {
  return pilot_design_at(pilot, alpha0).norm_mean;
}

// Pilot plug-in ELW covariance at a candidate n0: rebuild the design, clip
// the pilot inclusion probabilities, and evaluate the Theorem-2 plug-ins.
Eigen::MatrixXd sigma_elw_at(const SizingContext& ctx, double n0,
                             double* sum_check = nullptr) {
  const double alpha0 = n0 / static_cast<double>(ctx.n_total);
  const PilotDesign design = pilot_design_at(ctx.pilot, alpha0);
  const double gamma = solve_gamma(design.norms, ctx.alpha10, alpha0);
  const Eigen::Index m = design.norms.size();
  Eigen::VectorXd phi(m);
  kernels::active().clip_probs(design.norms.data(),
                               gamma / design.norm_mean, ctx.alpha10,
                               phi.data(), static_cast<std::size_t>(m));
  if (sum_check != nullptr) *sum_check = phi.mean();
  const VarianceEstimates var =
      variance_estimates(ctx.pilot.scores, phi, ctx.pilot.h, alpha0,
                         ctx.pilot.v.matrix);
  return var.sigma_elw;
}

struct NuPair {
  double scale = 0.0;  // sum(lambda) / sum(lambda^2)
  double dof = 0.0;    // (sum lambda)^2 / sum(lambda^2)
};

NuPair nu_at(const SizingContext& ctx, double n0) {
  const Eigen::MatrixXd sigma = sigma_elw_at(ctx, n0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  double s1 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double l = std::max(lambda[i], 0.0);
    s1 += l;
    s2 += l * l;
  }
  if (!(s2 > 0.0))
    throw std::runtime_error("sizing: degenerate plug-in covariance");
  return {s1 / s2, s1 * s1 / s2};
}

}  // namespace

SizeResult size_m1(const SizingContext& ctx, double c0) {
  if (!(c0 > 0.0)) throw std::invalid_argument("size_m1: c0 must be > 0");
  const double n_total = static_cast<double>(ctx.n_total);
  const double r0 = ctx.alpha10 * n_total;
  const double lo = r0 + 1.0, hi = n_total - 1.0;

  SizeResult out;
  double n0 = 2.0 * r0;
  for (int iter = 1; iter <= 200; ++iter) {
    out.iterations = iter;
    const double alpha0 =
        std::clamp(n0 / n_total, 1.0 / n_total, 1.0 - 1.0 / n_total);
    const double s = mean_norm_at(ctx.pilot, alpha0);
    const double rhs = s * s / c0;
    const double next = 0.5 * n0 + 0.5 * rhs;
    const double change = std::fabs(next - n0) / std::max(1.0, std::fabs(n0));
    n0 = next;
    if (change <= 1e-8) break;
  }
  out.clipped = (n0 < lo || n0 > hi);
  out.n0 = std::clamp(n0, lo, hi);
  out.r_second = n_total * (out.n0 - r0) / (n_total - r0);
  return out;
}

SizeResult size_m2(const SizingContext& ctx, double d, double a) {
  if (!(d > 0.0)) throw std::invalid_argument("size_m2: d must be > 0");
  if (!(a > 0.0 && a < 1.0))
    throw std::invalid_argument("size_m2: a must lie in (0,1)");
  const double n_total = static_cast<double>(ctx.n_total);
  const double r0 = ctx.alpha10 * n_total;
  const double lo = r0 + 1.0, hi = n_total - 1.0;
  const double nd2 = n_total * d * d;

  // Coverage equation residual; increasing in n0 when the plug-in variance
  // shrinks with the sampling fraction (the usual case).
  auto residual = [&](double n0) {
    const NuPair nu = nu_at(ctx, n0);
    return nu.scale * nd2 - chi2_quantile(nu.dof, 1.0 - a);
  };

  SizeResult out;
  out.has_nu_star = true;

  double f_lo = residual(lo);
  double f_hi = residual(hi);
  out.iterations = 2;
  if (f_lo >= 0.0 || f_hi <= 0.0) {
    // No sign change: every size (or none) meets the requirement.
    out.clipped = true;
    out.n0 = (f_lo >= 0.0) ? lo : hi;
    out.nu_star = nu_at(ctx, out.n0).scale;
    out.r_second = n_total * (out.n0 - r0) / (n_total - r0);
    return out;
  }

  // Verify empirical monotonicity on a coarse probe; fall back to a grid
  // scan when it fails.
  bool monotone = true;
  {
    double prev = f_lo;
    for (int i = 1; i <= 7 && monotone; ++i) {
      const double n0 = lo + (hi - lo) * static_cast<double>(i) / 8.0;
      const double f = residual(n0);
      out.iterations += 1;
      if (f < prev - 1e-12 * (std::fabs(prev) + 1.0)) monotone = false;
      prev = f;
    }
  }

  double a_n = lo, b_n = hi;
  if (!monotone) {
    // Grid scan: leftmost sign change, then refine within that cell.
    const int grid = 64;
    double prev_n = lo, prev_f = f_lo;
    for (int i = 1; i <= grid; ++i) {
      const double n0 = lo + (hi - lo) * static_cast<double>(i) / grid;
      const double f = residual(n0);
      out.iterations += 1;
      if (prev_f < 0.0 && f >= 0.0) {
        a_n = prev_n;
        b_n = n0;
        break;
      }
      prev_n = n0;
      prev_f = f;
    }
  }
  for (int iter = 0; iter < 100; ++iter) {
    const double mid = 0.5 * (a_n + b_n);
    const double f = residual(mid);
    out.iterations += 1;
    if (f < 0.0)
      a_n = mid;
    else
      b_n = mid;
    if (b_n - a_n <= 1e-6 * std::max(1.0, b_n)) break;
  }
  out.n0 = 0.5 * (a_n + b_n);
  out.nu_star = nu_at(ctx, out.n0).scale;
  out.r_second = n_total * (out.n0 - r0) / (n_total - r0);
  return out;
}

SizeResult determine_size(const SizingContext& ctx, const PrecisionSpec& spec) {
  return spec.kind == PrecisionSpec::Kind::R1 ? size_m1(ctx, spec.c0)
                                              : size_m2(ctx, spec.d, spec.a);
}

double m2_radius_for_size(const SizingContext& ctx, double n0, double a) {
  const NuPair nu = nu_at(ctx, n0);
  const double quantile = chi2_quantile(nu.dof, 1.0 - a);
  return std::sqrt(quantile / (nu.scale * static_cast<double>(ctx.n_total)));
}

}  // namespace subsamp
