#include "subsamp/solver.hpp"

#include <cmath>
#include <stdexcept>

#include "subsamp/kernels.hpp"

namespace subsamp {

namespace {

// H = X^T diag(w) X via the dot3 kernel; columns of X are contiguous.
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& w) {
  const auto& k = kernels::active();
  const Eigen::Index q = x.cols();
  const std::size_t n = static_cast<std::size_t>(x.rows());
  Eigen::MatrixXd h(q, q);
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = a; b < q; ++b) {
      const double v = k.dot3(w.data(), x.col(a).data(), x.col(b).data(), n);
      h(a, b) = v;
      h(b, a) = v;
    }
  return h;
}

Eigen::VectorXd weighted_column_dots(const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& w) {
  const auto& k = kernels::active();
  const Eigen::Index q = x.cols();
  const std::size_t n = static_cast<std::size_t>(x.rows());
  Eigen::VectorXd g(q);
  for (Eigen::Index a = 0; a < q; ++a)
    g[a] = k.dot(w.data(), x.col(a).data(), n);
  return g;
}

// Solves H d = -g, adding a ridge proportional to trace(H) whenever the
// factorization is not usable.
Eigen::VectorXd newton_direction(Eigen::MatrixXd h, const Eigen::VectorXd& g) {
  const double trace = h.trace();
  double ridge = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Eigen::VectorXd d = ldlt.solve(-g);
      if (d.allFinite()) return d;
    }
    ridge = (ridge == 0.0) ? 1e-10 * std::max(trace, 1.0) : ridge * 10.0;
    h.diagonal().array() += ridge;
  }
  throw std::runtime_error("Newton system unsolvable even with ridge");
}

void check_design(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  const Eigen::Index q = x.cols();
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] < 0.0) throw std::invalid_argument("negative weight");
    if (w[i] > 0.0) ++positive;
  }
  if (positive < q)
    throw std::runtime_error("rank deficient: fewer positive-weight rows than parameters");
  Eigen::VectorXd mask = (w.array() > 0.0).cast<double>();
  Eigen::MatrixXd gram = weighted_gram(x, mask);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double tol = 1e-12 * std::max(1.0, gram.trace());
  if (eig.eigenvalues().minCoeff() <= tol)
    throw std::runtime_error("rank deficient design among positive-weight rows");
}

// Per-observation multiplier c_i with score_i = c_i * x_i, and the Newton
// curvature weight kappa_i with Hessian = sum w_i kappa_i x_i x_i^T.
void smooth_factors(const ModelFamily& family, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& y, Eigen::VectorXd& c,
                    Eigen::VectorXd& kappa) {
  const Eigen::Index n = u.size();
  c.resize(n);
  kappa.resize(n);
  switch (family.kind) {
    case FamilyKind::Poisson:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = clamped_exp(u[i]);
        c[i] = mu - y[i];
        kappa[i] = mu;
      }
      break;
    case FamilyKind::Logistic:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double p = expit(u[i]);
        c[i] = p - y[i];
        kappa[i] = p * (1.0 - p);
      }
      break;
    case FamilyKind::LeastSquares:
      for (Eigen::Index i = 0; i < n; ++i) {
        c[i] = -2.0 * (y[i] - u[i]);
        kappa[i] = 2.0;
      }
      break;
    default:
      throw std::logic_error("smooth_factors called for quantile family");
  }
}

double weighted_loss(const ModelFamily& family, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  double total = 0.0;
  switch (family.kind) {
    case FamilyKind::Poisson:
      for (Eigen::Index i = 0; i < u.size(); ++i)
        total += w[i] * (-y[i] * u[i] + clamped_exp(u[i]));
      break;
    case FamilyKind::Logistic:
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double t = u[i];
        const double softplus = (t > 0.0) ? t + std::log1p(std::exp(-t))
                                          : std::log1p(std::exp(t));
        total += w[i] * (-y[i] * t + softplus);
      }
      break;
    case FamilyKind::LeastSquares:
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double r = y[i] - u[i];
        total += w[i] * r * r;
      }
      break;
    case FamilyKind::Quantile: {
      const double tau = family.tau;
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double r = y[i] - u[i];
        total += w[i] * r * (tau - (r < 0.0 ? 1.0 : 0.0));
      }
      break;
    }
  }
  return total;
}

FitResult fit_smooth(const ModelFamily& family, const Eigen::MatrixXd& x,
                     const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                     Eigen::VectorXd theta, const FitOptions& opts) {
  FitResult result;
  Eigen::VectorXd u = x * theta;
  Eigen::VectorXd c, kappa, wc, wk;
  double risk = weighted_loss(family, u, y, w);

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    result.iterations = iter;
    smooth_factors(family, u, y, c, kappa);
    wc = w.cwiseProduct(c);
    Eigen::VectorXd grad = weighted_column_dots(x, wc);
    result.final_gradient_norm = grad.lpNorm<Eigen::Infinity>();
    if (result.final_gradient_norm <= opts.grad_tol) {
      result.converged = true;
      // One polishing Newton step: quadratic convergence makes the iterate
      // machine-precise, so fits agree across weight scalings.
      wk = w.cwiseProduct(kappa);
      Eigen::VectorXd dir = newton_direction(weighted_gram(x, wk), grad);
      Eigen::VectorXd trial = theta + dir;
      Eigen::VectorXd u_trial = x * trial;
      smooth_factors(family, u_trial, y, c, kappa);
      wc = w.cwiseProduct(c);
      const double polished =
          weighted_column_dots(x, wc).lpNorm<Eigen::Infinity>();
      if (polished < result.final_gradient_norm) {
        theta = std::move(trial);
        u = std::move(u_trial);
        result.final_gradient_norm = polished;
      }
      break;
    }
    wk = w.cwiseProduct(kappa);
    Eigen::MatrixXd hess = weighted_gram(x, wk);
    Eigen::VectorXd dir = newton_direction(hess, grad);

    const double slope = grad.dot(dir);
    // Below the rounding floor of the risk sum the Armijo test is
    // unverifiable; take the unit Newton step (contractive endgame).
    if (-slope <= 1e-14 * (std::fabs(risk) + 1.0)) {
      theta += dir;
      u = x * theta;
      risk = weighted_loss(family, u, y, w);
      continue;
    }
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd trial = theta + step * dir;
      Eigen::VectorXd u_trial = x * trial;
      const double risk_trial = weighted_loss(family, u_trial, y, w);
      if (risk_trial <= risk + opts.armijo_c * step * slope) {
        theta = std::move(trial);
        u = std::move(u_trial);
        risk = risk_trial;
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted) break;  // line search collapsed; report best iterate
  }
  result.theta = std::move(theta);
  if (!result.converged) {
    // Re-evaluate the gradient at the final iterate.
    smooth_factors(family, u, y, c, kappa);
    wc = w.cwiseProduct(c);
    result.final_gradient_norm =
        weighted_column_dots(x, wc).lpNorm<Eigen::Infinity>();
    result.converged = result.final_gradient_norm <= opts.grad_tol;
  }
  return result;
}

double subgradient_balance(const ModelFamily& family, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                           const Eigen::VectorXd& theta) {
  const Eigen::VectorXd u = x * theta;
  Eigen::VectorXd c(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    c[i] = w[i] * (family.tau - (y[i] - u[i] < 0.0 ? 1.0 : 0.0));
  Eigen::VectorXd g = x.transpose() * c;
  return g.lpNorm<Eigen::Infinity>();
}

// Hunter-Lange majorize-minimize on the check loss: each sweep solves the
// weighted least-squares system induced by the current residuals, with the
// perturbation epsilon stepped down to 1e-6.
FitResult fit_quantile(const ModelFamily& family, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                       Eigen::VectorXd theta, const FitOptions& opts) {
  FitResult result;
  const double tau = family.tau;
  const Eigen::Index n = x.rows();
  Eigen::VectorXd res = y - x * theta;
  Eigen::VectorXd omega(n);
  const Eigen::VectorXd wx_lin = weighted_column_dots(x, w);  // sum w_i x_i

  bool last_stage_converged = false;
  int total_iter = 0;
  for (double eps = 1e-1; eps >= 0.5e-6; eps *= 0.1) {
    last_stage_converged = false;
    for (int sweep = 0; sweep < opts.max_iter; ++sweep) {
      ++total_iter;
      for (Eigen::Index i = 0; i < n; ++i)
        omega[i] = w[i] / (2.0 * (eps + std::fabs(res[i])));
      Eigen::MatrixXd gram = weighted_gram(x, omega);
      Eigen::VectorXd rhs =
          weighted_column_dots(x, omega.cwiseProduct(y)) + (tau - 0.5) * wx_lin;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
      Eigen::VectorXd next;
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        next = ldlt.solve(rhs);
      } else {
        Eigen::MatrixXd ridged = gram;
        ridged.diagonal().array() += 1e-10 * std::max(1.0, gram.trace());
        next = ridged.ldlt().solve(rhs);
      }
      const double change = (next - theta).lpNorm<Eigen::Infinity>();
      theta = std::move(next);
      res = y - x * theta;
      if (change <= opts.theta_tol) {
        last_stage_converged = true;
        break;
      }
    }
  }
  result.theta = std::move(theta);
  result.iterations = total_iter;
  result.converged = last_stage_converged;
  result.final_gradient_norm = subgradient_balance(family, x, y, w, result.theta);
  return result;
}

}  // namespace

FitResult fit(const ModelFamily& family, const Eigen::MatrixXd& x_rows,
              const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
              const Eigen::VectorXd& theta_init, const FitOptions& opts) {
  if (x_rows.rows() != y.size() || x_rows.rows() != weights.size())
    throw std::invalid_argument("fit: row count mismatch");
  if (theta_init.size() != x_rows.cols())
    throw std::invalid_argument("fit: theta_init dimension mismatch");
  check_design(x_rows, weights);
  if (family.smooth())
    return fit_smooth(family, x_rows, y, weights, theta_init, opts);
  return fit_quantile(family, x_rows, y, weights, theta_init, opts);
}

FitResult fit(const ModelFamily& family, const Eigen::MatrixXd& x_rows,
              const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
              const FitOptions& opts) {
  return fit(family, x_rows, y, weights,
             Eigen::VectorXd::Zero(x_rows.cols()), opts);
}

double empirical_risk(const ModelFamily& family, const Eigen::MatrixXd& x_rows,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                      const Eigen::VectorXd& theta) {
  if (x_rows.rows() != y.size() || x_rows.rows() != weights.size())
    throw std::invalid_argument("empirical_risk: row count mismatch");
  const Eigen::VectorXd u = x_rows * theta;
  return weighted_loss(family, u, y, weights);
}

}  // namespace subsamp
