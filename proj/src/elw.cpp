#include "subsamp/elw.hpp"

#include <cmath>
#include <stdexcept>

#include "subsamp/kernels.hpp"

namespace subsamp {

namespace {

// Dual value, gradient and Hessian at lambda. t_i = 1 + lambda^T he_i must be
// positive on entry.
struct DualState {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;  // negative semidefinite
};

Eigen::VectorXd dual_t(const Eigen::MatrixXd& he, const Eigen::VectorXd& lambda) {
  return Eigen::VectorXd::Ones(he.rows()) + he * lambda;
}

double dual_value(const Eigen::VectorXd& t) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) v += std::log(t[i]);
  return v;
}

DualState dual_state(const Eigen::MatrixXd& he, const Eigen::VectorXd& t) {
  const auto& k = kernels::active();
  const Eigen::Index n = he.rows();
  const Eigen::Index m = he.cols();
  DualState s;
  s.value = dual_value(t);
  Eigen::VectorXd inv_t(n);
  k.reciprocal(t.data(), inv_t.data(), static_cast<std::size_t>(n));
  s.grad.resize(m);
  for (Eigen::Index j = 0; j < m; ++j)
    s.grad[j] = k.dot(he.col(j).data(), inv_t.data(), static_cast<std::size_t>(n));
  const Eigen::VectorXd inv_t2 = inv_t.cwiseProduct(inv_t);
  s.hess.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a; b < m; ++b) {
      const double v = -k.dot3(inv_t2.data(), he.col(a).data(),
                               he.col(b).data(), static_cast<std::size_t>(n));
      s.hess(a, b) = v;
      s.hess(b, a) = v;
    }
  return s;
}

Eigen::VectorXd weights_from_lambda(const Eigen::VectorXd& t) {
  const double n = static_cast<double>(t.size());
  Eigen::VectorXd p(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) p[i] = 1.0 / (n * t[i]);
  return p;
}

// Scalar dual for the fallback's inner problem: g(lam) with he = phi - alpha.
// psi(lam) = sum (phi_i - alpha)/(1 + lam (phi_i - alpha)) is strictly
// decreasing on the feasible interval; solve psi = 0 by bisection + Newton.
double solve_scalar_lambda(const Eigen::VectorXd& g) {
  const double gmax = g.maxCoeff();
  const double gmin = g.minCoeff();
  if (!(gmax > 0.0 && gmin < 0.0))
    throw std::runtime_error("scalar EL constraint infeasible");
  const double eps = 1e-12;
  double lo = -1.0 / gmax;
  double hi = -1.0 / gmin;  // gmin < 0, so hi > 0
  lo += eps * (hi - lo);
  hi -= eps * (hi - lo);
  auto psi = [&](double lam) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) v += g[i] / (1.0 + lam * g[i]);
    return v;
  };
  double a = lo, b = hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (a + b);
    const double v = psi(mid);
    if (v > 0.0)
      a = mid;
    else
      b = mid;
    if (b - a < 1e-15 * (std::fabs(a) + std::fabs(b) + 1.0)) break;
  }
  return 0.5 * (a + b);
}

}  // namespace

ConstraintMatrix build_constraints(const Eigen::VectorXd& phi_sampled,
                                   const Eigen::MatrixXd& aux_sampled,
                                   double alpha0, ElwMode mode) {
  if (aux_sampled.size() > 0 && aux_sampled.rows() != phi_sampled.size())
    throw std::invalid_argument(
        "auxiliary rows not aligned with sampled units");
  ConstraintMatrix out;
  const Eigen::Index n = phi_sampled.size();
  const Eigen::Index d = aux_sampled.size() > 0 ? aux_sampled.cols() : 0;
  out.he.resize(n, 1 + d);
  out.he.col(0) = phi_sampled.array() - alpha0;
  if (d > 0) out.he.rightCols(d) = aux_sampled;
  out.mode = mode;
  out.alpha0 = alpha0;
  return out;
}

ConstraintMatrix build_constraints(const CaptureSample& sample,
                                   const Eigen::MatrixXd& aux_sampled,
                                   double alpha0, ElwMode mode) {
  const Eigen::Index n = static_cast<Eigen::Index>(sample.sampled_indices.size());
  if (aux_sampled.size() > 0 && aux_sampled.rows() != n)
    throw std::invalid_argument(
        "auxiliary rows not aligned with sampled units");
  Eigen::VectorXd phi(n);
  for (Eigen::Index i = 0; i < n; ++i)
    phi[i] = sample.phi[sample.sampled_indices[static_cast<std::size_t>(i)]];
  return build_constraints(phi, aux_sampled, alpha0, mode);
}

SolveLambdaResult solve_lambda(const ConstraintMatrix& constraints,
                               const ElwOptions& opts) {
  const Eigen::MatrixXd& he = constraints.he;
  const Eigen::Index n = he.rows();
  const Eigen::Index m = he.cols();
  SolveLambdaResult out;
  if (n <= m)
    throw std::invalid_argument("solve_lambda needs n > 1+d sampled units");
  // Degenerate matrix: every row equal.
  bool all_equal = true;
  for (Eigen::Index i = 1; i < n && all_equal; ++i)
    all_equal = (he.row(i) - he.row(0)).lpNorm<Eigen::Infinity>() == 0.0;
  if (all_equal) {
    if (he.row(0).lpNorm<Eigen::Infinity>() == 0.0) {
      // All rows are exactly the origin: uniform weights satisfy everything.
      out.feasible = true;
      out.solution.lambda = Eigen::VectorXd::Zero(m);
      out.solution.p =
          Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
      out.solution.status = ElwStatus::Constrained;
      return out;
    }
    throw std::invalid_argument("degenerate constraint matrix: all rows equal");
  }

  const double barrier = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd t = dual_t(he, lambda);
  int collapse_streak = 0;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    out.solution.iterations = iter;
    DualState s = dual_state(he, t);
    const double gnorm = s.grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= opts.grad_tol) break;

    // Ascent direction for the concave dual.
    Eigen::MatrixXd neg_h = -s.hess;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_h);
    Eigen::VectorXd dir;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      dir = ldlt.solve(s.grad);
    } else {
      neg_h.diagonal().array() += 1e-12 * std::max(1.0, neg_h.trace());
      dir = neg_h.ldlt().solve(s.grad);
    }
    if (!dir.allFinite()) dir = s.grad;  // fall back to steepest ascent

    const double slope = s.grad.dot(dir);
    // Ascent predicted below the rounding floor of the dual sum: the Armijo
    // test is unverifiable, so take the unit Newton step if it stays inside
    // the barrier (quadratic endgame).
    if (slope <= 1e-14 * (std::fabs(s.value) + 1.0)) {
      Eigen::VectorXd trial = lambda + dir;
      Eigen::VectorXd t_trial = dual_t(he, trial);
      if (t_trial.minCoeff() > barrier) {
        lambda = std::move(trial);
        t = std::move(t_trial);
        continue;
      }
      break;  // at the barrier with negligible ascent left
    }
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls) {
      Eigen::VectorXd trial = lambda + step * dir;
      Eigen::VectorXd t_trial = dual_t(he, trial);
      if (t_trial.minCoeff() > barrier) {
        const double v = dual_value(t_trial);
        if (v >= s.value + 1e-4 * step * slope) {
          lambda = std::move(trial);
          t = std::move(t_trial);
          accepted = true;
          break;
        }
      }
      step *= 0.5;
      if (step < opts.collapse_step) break;
    }
    if (!accepted) {
      if (gnorm > opts.collapse_grad) {
        if (++collapse_streak >= opts.collapse_count) {
          out.feasible = false;
          out.message = "dual step collapse: origin outside the convex hull";
          return out;
        }
      } else {
        break;  // gradient already tiny, accept the iterate
      }
    } else {
      collapse_streak = 0;
    }
  }

  Eigen::VectorXd p = weights_from_lambda(t);
  const double sum_p = kernels::active().sum(p.data(), static_cast<std::size_t>(n));
  if (std::fabs(sum_p - 1.0) > opts.sum_tol) {
    // Divergent dual: the maximum is approached at infinity, which happens
    // exactly when the constraint set is infeasible.
    out.feasible = false;
    out.message = "dual diverged (sum p = " + std::to_string(sum_p) +
                  "): origin outside the convex hull";
    return out;
  }
  out.feasible = true;
  out.solution.lambda = std::move(lambda);
  out.solution.p = std::move(p);
  out.solution.status = ElwStatus::Constrained;
  return out;
}

ELWSolution fallback_unknown_alpha(const Eigen::VectorXd& phi_sampled,
                                   std::int64_t n_total,
                                   const ElwOptions& opts) {
  const Eigen::Index n = phi_sampled.size();
  if (n < 2) throw std::invalid_argument("fallback needs at least two units");
  const double phi_min = phi_sampled.minCoeff();
  const double phi_max = phi_sampled.maxCoeff();
  if (phi_max - phi_min <= 0.0)
    throw std::runtime_error(
        "fallback undefined: all sampled inclusion probabilities equal");
  if (n_total < n)
    throw std::invalid_argument("n_total smaller than the sample");

  const double extra = static_cast<double>(n_total - n);
  int evaluations = 0;
  auto profile = [&](double alpha, Eigen::VectorXd* p_out) {
    ++evaluations;
    const Eigen::VectorXd g = phi_sampled.array() - alpha;
    const double lam = solve_scalar_lambda(g);
    double ll = 0.0;
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = 1.0 / (static_cast<double>(n) * (1.0 + lam * g[i]));
      ll += std::log(p[i]);
    }
    ll += extra * std::log1p(-alpha);
    if (p_out) *p_out = std::move(p);
    return std::make_pair(ll, lam);
  };

  // Feasible alpha range: strictly inside (min phi, max phi) and below 1.
  const double span = phi_max - phi_min;
  double lo = phi_min + 1e-9 * span;
  double hi = std::min(phi_max - 1e-9 * span, 1.0 - 1e-12);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = profile(x1, nullptr).first;
  double f2 = profile(x2, nullptr).first;
  while (hi - lo > opts.alpha_tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = profile(x2, nullptr).first;
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = profile(x1, nullptr).first;
    }
  }
  const double alpha_hat = 0.5 * (lo + hi);
  ELWSolution sol;
  Eigen::VectorXd p;
  auto [ll, lam] = profile(alpha_hat, &p);
  (void)ll;
  sol.lambda = Eigen::VectorXd::Constant(1, lam);
  sol.p = std::move(p);
  sol.status = ElwStatus::FallbackUnknownAlpha;
  sol.alpha_hat = alpha_hat;
  sol.iterations = evaluations;
  return sol;
}

ELWSolution elw_weights(const ConstraintMatrix& constraints,
                        const Eigen::VectorXd& phi_sampled,
                        std::int64_t n_total, const ElwOptions& opts) {
  SolveLambdaResult res = solve_lambda(constraints, opts);
  if (res.feasible) return res.solution;
  return fallback_unknown_alpha(phi_sampled, n_total, opts);
}

}  // namespace subsamp
