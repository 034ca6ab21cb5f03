#include "subsamp/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "subsamp/kernels.hpp"

namespace subsamp {

namespace {

void gather_rows(const DataMatrix& data,
                 const std::vector<std::int64_t>& indices, Eigen::MatrixXd& x,
                 Eigen::VectorXd& y) {
  const Eigen::Index n = static_cast<Eigen::Index>(indices.size());
  x.resize(n, data.num_covariates());
  y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = data.covariates.row(indices[static_cast<std::size_t>(i)]);
    y[i] = data.response[indices[static_cast<std::size_t>(i)]];
  }
}

}  // namespace

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "unif") return EstimatorKind::Unif;
  if (name == "ipw") return EstimatorKind::Ipw;
  if (name == "elw") return EstimatorKind::Elw;
  if (name == "elwai") return EstimatorKind::Elwai;
  throw std::invalid_argument("unknown estimator '" + name + "'");
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Unif: return "unif";
    case EstimatorKind::Ipw: return "ipw";
    case EstimatorKind::Elw: return "elw";
    case EstimatorKind::Elwai: return "elwai";
  }
  return "?";
}

FitResult estimate(EstimatorKind kind, const CaptureSample& sample,
                   const DataMatrix& data, const AuxStatistic* aux,
                   const ModelFamily& family, double alpha0,
                   const Eigen::VectorXd& theta_init, ElwMode mode,
                   EstimateInfo* info) {
  if (sample.n == 0) throw std::invalid_argument("empty capture sample");
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  gather_rows(data, sample.sampled_indices, x, y);
  const Eigen::Index n = x.rows();

  Eigen::VectorXd weights;
  switch (kind) {
    case EstimatorKind::Unif:
      weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
      break;
    case EstimatorKind::Ipw: {
      weights.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double phi =
            sample.phi[sample.sampled_indices[static_cast<std::size_t>(i)]];
        if (!(phi > 0.0))
          throw std::runtime_error("IPW requires phi > 0 on sampled units");
        weights[i] = 1.0 / (static_cast<double>(data.n_rows) * phi);
      }
      break;
    }
    case EstimatorKind::Elw:
    case EstimatorKind::Elwai: {
      if (kind == EstimatorKind::Elwai && (aux == nullptr || aux->dim() == 0))
        throw std::invalid_argument("ELWAI requires auxiliary information");
      // Negligible mode uses the additive small-fraction inclusion
      // probabilities phi* = alpha10 + pi; the caller passes alpha* for
      // alpha0. Standard mode uses the exact multiplicative phi.
      Eigen::VectorXd phi(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::int64_t row =
            sample.sampled_indices[static_cast<std::size_t>(i)];
        phi[i] = (mode == ElwMode::Negligible)
                     ? sample.alpha10 + sample.pi[row]
                     : sample.phi[row];
      }
      Eigen::MatrixXd aux_rows(n, 0);
      if (kind == EstimatorKind::Elwai) {
        aux_rows.resize(n, aux->dim());
        for (Eigen::Index i = 0; i < n; ++i)
          aux_rows.row(i) =
              aux->h_values.row(sample.sampled_indices[static_cast<std::size_t>(i)]);
      }
      ConstraintMatrix constraints =
          build_constraints(phi, aux_rows, alpha0, mode);
      ELWSolution sol = elw_weights(constraints, phi, data.n_rows);
      if (info != nullptr) {
        info->used_fallback = sol.status == ElwStatus::FallbackUnknownAlpha;
        info->alpha_hat = sol.alpha_hat;
        info->el_iterations = sol.iterations;
      }
      weights = sol.p;
      break;
    }
  }
  return fit(family, x, y, weights, theta_init);
}

VarianceEstimates variance_estimates(const Eigen::MatrixXd& scores,
                                     const Eigen::VectorXd& phi,
                                     const Eigen::MatrixXd& h, double alpha0,
                                     const Eigen::MatrixXd& v) {
  const Eigen::Index m = scores.rows();
  const Eigen::Index q = scores.cols();
  const Eigen::Index d = h.size() > 0 ? h.cols() : 0;
  if (phi.size() != m || (d > 0 && h.rows() != m))
    throw std::invalid_argument("variance_estimates: row mismatch");
  if (!(alpha0 > 0.0 && alpha0 < 1.0))
    throw std::invalid_argument("variance_estimates: alpha0 must lie in (0,1)");
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(phi[i] > 0.0))
      throw std::invalid_argument("variance_estimates: phi must be positive");

  const auto& k = kernels::active();
  const double inv_m = 1.0 / static_cast<double>(m);
  Eigen::VectorXd inv_phi(m);
  k.reciprocal(phi.data(), inv_phi.data(), static_cast<std::size_t>(m));

  VarianceEstimates out;
  out.b_ll.resize(q, q);
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = a; b < q; ++b) {
      const double val = inv_m * k.dot3(inv_phi.data(), scores.col(a).data(),
                                        scores.col(b).data(),
                                        static_cast<std::size_t>(m));
      out.b_ll(a, b) = val;
      out.b_ll(b, a) = val;
    }

  out.b_l1.resize(q);
  for (Eigen::Index a = 0; a < q; ++a)
    out.b_l1[a] = inv_m * k.dot(inv_phi.data(), scores.col(a).data(),
                                static_cast<std::size_t>(m));
  out.b_11 = inv_m * k.sum(inv_phi.data(), static_cast<std::size_t>(m));

  // b_i = (-alpha0, h_i^T)^T
  out.b_lh.resize(q, 1 + d);
  out.b_lh.col(0) = -alpha0 * out.b_l1;
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index a = 0; a < q; ++a)
      out.b_lh(a, 1 + j) =
          inv_m * k.dot3(inv_phi.data(), scores.col(a).data(),
                         h.col(j).data(), static_cast<std::size_t>(m));

  out.b_hh.resize(1 + d, 1 + d);
  out.b_hh(0, 0) = alpha0 * alpha0 * out.b_11 - alpha0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double cross = -alpha0 * inv_m *
                         k.dot(inv_phi.data(), h.col(j).data(),
                               static_cast<std::size_t>(m));
    out.b_hh(0, 1 + j) = cross;
    out.b_hh(1 + j, 0) = cross;
    for (Eigen::Index l = j; l < d; ++l) {
      const double val = inv_m * k.dot3(inv_phi.data(), h.col(j).data(),
                                        h.col(l).data(),
                                        static_cast<std::size_t>(m));
      out.b_hh(1 + j, 1 + l) = val;
      out.b_hh(1 + l, 1 + j) = val;
    }
  }

  // Ridge repair for a nearly singular b_hh.
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.b_hh);
    const double min_eig = eig.eigenvalues().minCoeff();
    const double ridge =
        1e-8 * out.b_hh.trace() / static_cast<double>(1 + d);
    if (min_eig <= ridge) {
      out.b_hh.diagonal().array() += std::max(ridge, ridge - min_eig);
      out.hh_ridged = true;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig2(out.b_hh);
      out.hh_singular = !(eig2.eigenvalues().minCoeff() > 0.0);
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> v_ldlt(v);
  if (v_ldlt.info() != Eigen::Success)
    throw std::runtime_error("variance_estimates: V not factorizable");
  const Eigen::MatrixXd v_inv =
      v_ldlt.solve(Eigen::MatrixXd::Identity(q, q));

  out.sigma_ipw = v_inv * out.b_ll * v_inv;
  Eigen::LDLT<Eigen::MatrixXd> hh_ldlt(out.b_hh);
  const Eigen::MatrixXd middle =
      out.b_ll - out.b_lh * hh_ldlt.solve(out.b_lh.transpose());
  out.sigma_elw = v_inv * middle * v_inv;

  // Theorem 2(c): single phi-moment constraint. Using the ridged (1,1) entry
  // keeps sigma_elw0 - sigma_elw exactly PSD.
  const double denom = out.b_hh(0, 0) / (alpha0 * alpha0);  // b_11 - 1/alpha0
  const Eigen::MatrixXd middle0 =
      out.b_ll - (out.b_l1 * out.b_l1.transpose()) / denom;
  out.sigma_elw0 = v_inv * middle0 * v_inv;

  out.sigma_ipw = 0.5 * (out.sigma_ipw + out.sigma_ipw.transpose()).eval();
  out.sigma_elw = 0.5 * (out.sigma_elw + out.sigma_elw.transpose()).eval();
  out.sigma_elw0 = 0.5 * (out.sigma_elw0 + out.sigma_elw0.transpose()).eval();
  return out;
}

VarianceEstimates variance_estimates(const DataMatrix& data,
                                     const std::vector<std::int64_t>& rows,
                                     const ModelFamily& family,
                                     const Eigen::VectorXd& theta_ref,
                                     const VEstimate& v,
                                     const AuxStatistic* aux,
                                     const Eigen::VectorXd& phi_rows,
                                     double alpha0) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  gather_rows(data, rows, x, y);
  const Eigen::MatrixXd scores = score_rows(family, x, y, theta_ref);
  Eigen::MatrixXd h(static_cast<Eigen::Index>(rows.size()),
                    aux != nullptr ? aux->dim() : 0);
  if (aux != nullptr && aux->dim() > 0)
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      h.row(i) = aux->h_values.row(rows[static_cast<std::size_t>(i)]);
  return variance_estimates(scores, phi_rows, h, alpha0, v.matrix);
}

}  // namespace subsamp
