#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "subsamp/capture.hpp"

namespace subsamp {

enum class ElwMode { Standard, Negligible };

// Constraint rows h_e over the sampled units. In standard mode the first
// column is phi_i - alpha0; in negligible mode the caller supplies the
// rescaled small-fraction quantities (phi*, alpha*) and the formula is the
// same — any common rescaling of the first column is absorbed into lambda.
struct ConstraintMatrix {
  Eigen::MatrixXd he;  // n x (1+d)
  ElwMode mode = ElwMode::Standard;
  double alpha0 = 0.0;
};

ConstraintMatrix build_constraints(const Eigen::VectorXd& phi_sampled,
                                   const Eigen::MatrixXd& aux_sampled,
                                   double alpha0,
                                   ElwMode mode = ElwMode::Standard);

// Overload taking a capture sample; aux_sampled rows must align with
// sample.sampled_indices (pass a 0-column matrix when there is no auxiliary
// information).
ConstraintMatrix build_constraints(const CaptureSample& sample,
                                   const Eigen::MatrixXd& aux_sampled,
                                   double alpha0,
                                   ElwMode mode = ElwMode::Standard);

enum class ElwStatus { Constrained, FallbackUnknownAlpha };

struct ELWSolution {
  Eigen::VectorXd lambda;
  Eigen::VectorXd p;  // weights on sampled units, positive, sum to one
  ElwStatus status = ElwStatus::Constrained;
  double alpha_hat = 0.0;  // fallback only
  int iterations = 0;
};

struct ElwOptions {
  double grad_tol = 1e-10;
  int max_iter = 200;
  double sum_tol = 1e-8;        // post-solve check on sum(p)
  double alpha_tol = 1e-8;      // golden-section tolerance in the fallback
  double collapse_step = 1e-14; // step-collapse infeasibility detector
  double collapse_grad = 1e-6;
  int collapse_count = 5;
};

struct SolveLambdaResult {
  bool feasible = false;
  ELWSolution solution;
  std::string message;  // set when infeasible
};

// Maximizes the concave dual g(lambda) = sum log(1 + lambda^T he_i) over
// {lambda : 1 + lambda^T he_i > 1/n^2} by damped Newton with backtracking.
// Infeasibility (origin outside the convex hull of the rows) is reported,
// not thrown; a degenerate constraint matrix (all rows equal) throws.
SolveLambdaResult solve_lambda(const ConstraintMatrix& constraints,
                               const ElwOptions& opts = {});

// Unknown-alpha weights: profile maximization of the empirical
// log-likelihood over alpha in (0,1) with the scalar constraint
// sum p_i (phi_i - alpha) = 0. Requires at least two distinct phi values.
ELWSolution fallback_unknown_alpha(const Eigen::VectorXd& phi_sampled,
                                   std::int64_t n_total,
                                   const ElwOptions& opts = {});

// Constrained solve with automatic fallback on infeasibility.
ELWSolution elw_weights(const ConstraintMatrix& constraints,
                        const Eigen::VectorXd& phi_sampled,
                        std::int64_t n_total, const ElwOptions& opts = {});

}  // namespace subsamp
