#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "subsamp/capture.hpp"
#include "subsamp/dataset.hpp"
#include "subsamp/elw.hpp"
#include "subsamp/models.hpp"
#include "subsamp/solver.hpp"

namespace subsamp {

enum class EstimatorKind { Unif, Ipw, Elw, Elwai };

EstimatorKind parse_estimator(const std::string& name);
std::string estimator_name(EstimatorKind kind);

struct EstimateInfo {
  bool used_fallback = false;
  double alpha_hat = 0.0;
  int el_iterations = 0;
};

// Fits theta from a capture sample. UNIF: weights 1/n; IPW: weights
// D_i/phi_i; ELW/ELWAI: empirical-likelihood weights (without/with the
// auxiliary constraints), falling back to the unknown-alpha weights when the
// constrained problem is infeasible. In negligible mode the EL constraints
// use the additive small-fraction quantities phi* = alpha10 + pi and
// alpha* = alpha10 + alpha20.
FitResult estimate(EstimatorKind kind, const CaptureSample& sample,
                   const DataMatrix& data, const AuxStatistic* aux,
                   const ModelFamily& family, double alpha0,
                   const Eigen::VectorXd& theta_init,
                   ElwMode mode = ElwMode::Standard,
                   EstimateInfo* info = nullptr);

// Plug-in asymptotic variance matrices. b_* are the sample-mean estimates
// over the supplied units (1/m sums weighted by 1/phi_i); sigma_* are the
// sandwich forms of Theorems 1-3. The Schur subtraction uses the (possibly
// ridged) b_hh, so sigma_ipw - sigma_elw and sigma_elw0 - sigma_elw are
// positive semidefinite by construction whenever b_hh is positive definite.
struct VarianceEstimates {
  Eigen::MatrixXd b_ll;   // q x q
  Eigen::MatrixXd b_lh;   // q x (1+d)
  Eigen::MatrixXd b_hh;   // (1+d) x (1+d), after any ridge
  Eigen::VectorXd b_l1;   // q
  double b_11 = 0.0;
  Eigen::MatrixXd sigma_ipw, sigma_elw, sigma_elw0;
  bool hh_ridged = false;
  bool hh_singular = false;  // not positive definite even after ridge
};

// scores: m x q rows of the score at the reference theta; h: m x d centered
// auxiliary values (d may be 0); phi: inclusion probabilities of the same
// units; v: the curvature matrix V.
VarianceEstimates variance_estimates(const Eigen::MatrixXd& scores,
                                     const Eigen::VectorXd& phi,
                                     const Eigen::MatrixXd& h, double alpha0,
                                     const Eigen::MatrixXd& v);

// Wrapper evaluating scores/aux at the given rows of the dataset.
VarianceEstimates variance_estimates(const DataMatrix& data,
                                     const std::vector<std::int64_t>& rows,
                                     const ModelFamily& family,
                                     const Eigen::VectorXd& theta_ref,
                                     const VEstimate& v,
                                     const AuxStatistic* aux,
                                     const Eigen::VectorXd& phi_rows,
                                     double alpha0);

}  // namespace subsamp
