#include "subsamp/design.hpp"

#include <cmath>
#include <stdexcept>

#include "subsamp/kernels.hpp"

namespace subsamp {

namespace {

// Residual norms ||a_i - K b_i|| computed columnwise with the streaming
// kernels: accumulate squared residual columns, then take square roots.
Eigen::VectorXd residual_norms(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b,
                               const Eigen::MatrixXd& k) {
  const auto& ops = kernels::active();
  const Eigen::Index m = a.rows();
  const Eigen::Index q = a.cols();
  const std::size_t n = static_cast<std::size_t>(m);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd col(m);
  for (Eigen::Index j = 0; j < q; ++j) {
    col = a.col(j);
    if (k.size() > 0)
      for (Eigen::Index l = 0; l < k.cols(); ++l)
        ops.axpy(-k(j, l), b.col(l).data(), col.data(), n);
    ops.accum_sq(col.data(), acc.data(), n);
  }
  return acc.cwiseSqrt();
}

Eigen::MatrixXd transform_scores(const Eigen::MatrixXd& scores,
                                 const VEstimate& v, Criterion criterion) {
  if (criterion == Criterion::L) return scores;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(v.matrix);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("pilot V not factorizable for the A-criterion");
  // rows a_i = V^-1 score_i  <=>  A = scores * V^-1 (V symmetric)
  return ldlt.solve(scores.transpose()).transpose();
}

}  // namespace

Criterion parse_criterion(const std::string& text) {
  if (text == "A" || text == "a") return Criterion::A;
  if (text == "L" || text == "l") return Criterion::L;
  throw std::invalid_argument("criterion must be A or L");
}

PilotContext make_pilot_context(const DataMatrix& data,
                                const AuxStatistic* aux,
                                const std::vector<std::int64_t>& pilot_rows,
                                const ModelFamily& family, Criterion criterion,
                                PlanTarget target) {
  if (pilot_rows.empty()) throw std::invalid_argument("empty pilot sample");
  PilotContext ctx;
  ctx.rows = pilot_rows;
  ctx.criterion = criterion;
  ctx.target = target;

  const Eigen::Index m = static_cast<Eigen::Index>(pilot_rows.size());
  Eigen::MatrixXd x(m, data.num_covariates());
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    x.row(i) = data.covariates.row(pilot_rows[static_cast<std::size_t>(i)]);
    y[i] = data.response[pilot_rows[static_cast<std::size_t>(i)]];
  }
  FitResult pilot_fit = fit(family, x, y, Eigen::VectorXd::Ones(m));
  // The pilot seeds the plan; a loosely converged fit is still usable.
  if (family.smooth() && !pilot_fit.converged &&
      pilot_fit.final_gradient_norm > 1e-4)
    throw std::runtime_error("pilot fit did not converge");
  ctx.theta = pilot_fit.theta;
  ctx.v = estimate_v(family, x, y, ctx.theta);
  ctx.scores = score_rows(family, x, y, ctx.theta);
  ctx.a = transform_scores(ctx.scores, ctx.v, criterion);
  ctx.h.resize(m, aux != nullptr ? aux->dim() : 0);
  if (aux != nullptr && aux->dim() > 0)
    for (Eigen::Index i = 0; i < m; ++i)
      ctx.h.row(i) = aux->h_values.row(pilot_rows[static_cast<std::size_t>(i)]);
  return ctx;
}

PilotDesign pilot_design_at(const PilotContext& pilot, double alpha0) {
  PilotDesign design;
  const Eigen::Index m = pilot.a.rows();
  const Eigen::Index d = pilot.h.cols();
  design.b.resize(m, 1 + d);
  design.b.col(0).setConstant(-alpha0);
  if (d > 0) design.b.rightCols(d) = pilot.h;
  if (pilot.target == PlanTarget::Ipw) {
    design.k = Eigen::MatrixXd::Zero(pilot.a.cols(), 1 + d);
  } else {
    design.k = fit_k(pilot.a, design.b);
  }
  design.norms = residual_norms(pilot.a, design.b, design.k);
  design.norm_mean = design.norms.mean();
  return design;
}

PilotFit make_pilot_fit(const DataMatrix& data, const AuxStatistic* aux,
                        const std::vector<std::int64_t>& pilot_rows,
                        const ModelFamily& family, Criterion criterion,
                        double alpha0, PlanTarget target) {
  PilotFit out;
  out.context =
      make_pilot_context(data, aux, pilot_rows, family, criterion, target);
  out.design = pilot_design_at(out.context, alpha0);
  out.alpha0 = alpha0;
  return out;
}

Eigen::MatrixXd fit_k(const Eigen::MatrixXd& a_vectors,
                      const Eigen::MatrixXd& b_vectors) {
  if (a_vectors.rows() != b_vectors.rows())
    throw std::invalid_argument("fit_k: row mismatch");
  const Eigen::MatrixXd cross = a_vectors.transpose() * b_vectors;
  Eigen::MatrixXd gram = b_vectors.transpose() * b_vectors;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    gram.diagonal().array() += 1e-10 * std::max(1.0, gram.trace());
    ldlt.compute(gram);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("fit_k: singular Gram matrix beyond ridge");
  }
  // K = cross * gram^-1, via gram^T X^T = cross^T
  return ldlt.solve(cross.transpose()).transpose();
}

double solve_gamma(const Eigen::VectorXd& norms, double alpha10, double alpha0,
                   bool* floor_warning) {
  if (norms.size() == 0) throw std::invalid_argument("solve_gamma: no norms");
  if (norms.minCoeff() < 0.0)
    throw std::invalid_argument("solve_gamma: negative norm");
  const double mean = norms.mean();
  if (!(mean > 0.0))
    throw std::invalid_argument("solve_gamma: norms must not be all zero");
  if (!(alpha10 < 1.0 && alpha0 < 1.0))
    throw std::runtime_error("requested alpha0 infeasible");
  if (floor_warning != nullptr) *floor_warning = false;
  if (alpha0 <= alpha10) {
    if (floor_warning != nullptr) *floor_warning = true;
    return 0.0;
  }

  const auto& ops = kernels::active();
  const Eigen::VectorXd u = norms / mean;
  const std::size_t n = static_cast<std::size_t>(u.size());

  double u_min_pos = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u[i] > 0.0 && (u_min_pos == 0.0 || u[i] < u_min_pos)) u_min_pos = u[i];
  const double gamma_hi = 1.0 / u_min_pos + 1.0;

  const double reachable = ops.clipped_mean(u.data(), gamma_hi, alpha10, n);
  if (alpha0 > reachable + 1e-12)
    throw std::runtime_error(
        "requested alpha0 infeasible: saturates at " + std::to_string(reachable));

  // The clipped mean is continuous and nondecreasing in gamma; bisect on the
  // predicate mean(gamma) >= alpha0, which converges to the leftmost root.
  double lo = 0.0, hi = gamma_hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (ops.clipped_mean(u.data(), mid, alpha10, n) >= alpha0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

Eigen::MatrixXd full_a_vectors(const PilotContext& pilot,
                               const DataMatrix& data,
                               const ModelFamily& family) {
  const Eigen::MatrixXd scores =
      score_rows(family, data.covariates, data.response, pilot.theta);
  return transform_scores(scores, pilot.v, pilot.criterion);
}

DesignOutput build_plan(const PilotFit& pilot, const DataMatrix& data,
                        const AuxStatistic* aux, const ModelFamily& family,
                        double alpha10, double alpha0,
                        const Eigen::MatrixXd* a_full) {
  const PilotContext& ctx = pilot.context;
  const PilotDesign& design = pilot.design;
  DesignOutput out;
  out.pilot_norms = design.norms;
  bool floor = false;
  out.gamma = solve_gamma(design.norms, alpha10, alpha0, &floor);

  // Per-unit a and b vectors at the pilot theta over the whole dataset.
  const Eigen::MatrixXd& a =
      (a_full != nullptr) ? *a_full : full_a_vectors(ctx, data, family);
  const Eigen::Index n_units = data.n_rows;
  const Eigen::Index d = ctx.h.cols();
  Eigen::MatrixXd b(n_units, 1 + d);
  b.col(0).setConstant(-alpha0);
  if (d > 0) {
    if (aux == nullptr || aux->dim() != d)
      throw std::invalid_argument("build_plan: auxiliary data mismatch");
    b.rightCols(d) = aux->h_values;
  }
  const Eigen::VectorXd norms = residual_norms(a, b, design.k);

  const auto& ops = kernels::active();
  out.phi_e.resize(n_units);
  // phi_e = clip(gamma * norm / pilot_mean) with the pilot-sample normalizer.
  ops.clip_probs(norms.data(), out.gamma / design.norm_mean, alpha10,
                 out.phi_e.data(), static_cast<std::size_t>(n_units));
  out.pi.resize(n_units);
  if (alpha10 >= 1.0) throw std::invalid_argument("alpha10 must be < 1");
  for (Eigen::Index i = 0; i < n_units; ++i)
    out.pi[i] = (out.phi_e[i] - alpha10) / (1.0 - alpha10);
  return out;
}

double eval_h1(const Eigen::VectorXd& phi, const Eigen::MatrixXd& a,
               const Eigen::MatrixXd& b, const Eigen::MatrixXd& k) {
  const Eigen::VectorXd norms = residual_norms(a, b, k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (!(phi[i] > 0.0)) throw std::invalid_argument("eval_h1: phi <= 0");
    total += norms[i] * norms[i] / phi[i];
  }
  return total / static_cast<double>(phi.size());
}

double eval_h2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
               const Eigen::MatrixXd& k) {
  return residual_norms(a, b, k).sum();
}

double eval_h(const Eigen::VectorXd& phi, const Eigen::MatrixXd& a,
              const Eigen::MatrixXd& b, double alpha0, HVariant variant,
              bool* singular) {
  const Eigen::Index n = a.rows();
  const Eigen::Index q = a.cols();
  const Eigen::Index db = b.cols();
  if (phi.size() != n || b.rows() != n)
    throw std::invalid_argument("eval_h: dimension mismatch");
  if (singular != nullptr) *singular = false;

  double first = 0.0;
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(q, db);  // sum a b^T / phi
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(db, db);  // sum b b^T / phi
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(phi[i] > 0.0 && phi[i] <= 1.0))
      throw std::invalid_argument("eval_h: phi outside (0,1]");
    const double w = 1.0 / phi[i];
    first += w * a.row(i).squaredNorm();
    cross.noalias() += w * a.row(i).transpose() * b.row(i);
    gram.noalias() += w * b.row(i).transpose() * b.row(i);
  }
  if (variant == HVariant::HStar) {
    // B_hh of the display: sum b b^T/phi - N alpha0 e1 e1^T
    gram(0, 0) -= static_cast<double>(n) * alpha0;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    if (singular != nullptr) *singular = true;
    gram.diagonal().array() += 1e-10 * std::max(1.0, std::fabs(gram.trace()));
    ldlt.compute(gram);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("eval_h: inner matrix singular");
  }
  const double correction =
      (cross * ldlt.solve(cross.transpose())).trace();
  return (first - correction) / static_cast<double>(n);
}

}  // namespace subsamp
