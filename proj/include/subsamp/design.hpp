#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "subsamp/dataset.hpp"
#include "subsamp/models.hpp"
#include "subsamp/solver.hpp"

namespace subsamp {

// Q = I (A-criterion, a_i = V^-1 score_i) or Q = V (L-criterion, a_i = score_i).
enum class Criterion { A, L };
Criterion parse_criterion(const std::string& text);

// Which estimator the plan is built for. The ELW plan projects the a-vectors
// onto the span of the b-vectors (residual norms ||a - K b||); the IPW plan
// has no moment constraints to exploit, so K = 0 and the norms are ||a||.
enum class PlanTarget { Elw, Ipw };

// alpha0-independent pilot quantities, reusable across candidate sample
// sizes during sizing.
struct PilotContext {
  std::vector<std::int64_t> rows;  // pilot (first-capture) row indices
  Eigen::VectorXd theta;           // pilot fit
  VEstimate v;
  Eigen::MatrixXd scores;          // m x q, raw score rows at theta
  Eigen::MatrixXd a;               // m x q, criterion-transformed scores
  Eigen::MatrixXd h;               // m x d centered aux values (d may be 0)
  Criterion criterion = Criterion::A;
  PlanTarget target = PlanTarget::Elw;
};

PilotContext make_pilot_context(const DataMatrix& data,
                                const AuxStatistic* aux,
                                const std::vector<std::int64_t>& pilot_rows,
                                const ModelFamily& family, Criterion criterion,
                                PlanTarget target = PlanTarget::Elw);

// b-vectors, fitted K and residual norms of the pilot at a given alpha0.
struct PilotDesign {
  Eigen::MatrixXd b;      // m x (1+d), rows (-alpha0, h_i^T)
  Eigen::MatrixXd k;      // q x (1+d)
  Eigen::VectorXd norms;  // ||a_i - K b_i||
  double norm_mean = 0.0;
};

PilotDesign pilot_design_at(const PilotContext& pilot, double alpha0);

// Assembled pilot product for plan construction (the spec's PilotFit).
struct PilotFit {
  PilotContext context;
  PilotDesign design;
  double alpha0 = 0.0;
};

PilotFit make_pilot_fit(const DataMatrix& data, const AuxStatistic* aux,
                        const std::vector<std::int64_t>& pilot_rows,
                        const ModelFamily& family, Criterion criterion,
                        double alpha0, PlanTarget target = PlanTarget::Elw);

// Least-squares K = (sum a b^T)(sum b b^T)^-1, with a trace ridge when the
// Gram matrix is singular.
Eigen::MatrixXd fit_k(const Eigen::MatrixXd& a_vectors,
                      const Eigen::MatrixXd& b_vectors);

// Smallest gamma with mean_i max(alpha10, min(gamma * u_i, 1)) = alpha0,
// where u_i = norms_i / mean(norms). Bisection on the nondecreasing
// piecewise-linear clipped mean, tolerance 1e-10. alpha0 <= alpha10 returns 0
// with a warning flag; an unreachable alpha0 throws.
double solve_gamma(const Eigen::VectorXd& norms, double alpha10, double alpha0,
                   bool* floor_warning = nullptr);

struct DesignOutput {
  Eigen::VectorXd phi_e;       // per-unit clipped inclusion probabilities
  Eigen::VectorXd pi;          // (phi_e - alpha10)/(1 - alpha10)
  double gamma = 0.0;
  Eigen::VectorXd pilot_norms; // retained for sizing
};

// Criterion-transformed a-vectors for every unit of the dataset at the pilot
// theta. Shared across plans built from the same pilot.
Eigen::MatrixXd full_a_vectors(const PilotContext& pilot,
                               const DataMatrix& data,
                               const ModelFamily& family);

// Evaluates the clipped plan for every unit of the dataset; gamma and the
// normalizing mean come from the pilot sample only. a_full, when given, must
// be the full_a_vectors output for this pilot.
DesignOutput build_plan(const PilotFit& pilot, const DataMatrix& data,
                        const AuxStatistic* aux, const ModelFamily& family,
                        double alpha10, double alpha0,
                        const Eigen::MatrixXd* a_full = nullptr);

// Audit evaluators for the design objective (not on the hot path).
enum class HVariant { HStar, H };
double eval_h(const Eigen::VectorXd& phi, const Eigen::MatrixXd& a,
              const Eigen::MatrixXd& b, double alpha0, HVariant variant,
              bool* singular = nullptr);
double eval_h1(const Eigen::VectorXd& phi, const Eigen::MatrixXd& a,
               const Eigen::MatrixXd& b, const Eigen::MatrixXd& k);
double eval_h2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
               const Eigen::MatrixXd& k);

}  // namespace subsamp
