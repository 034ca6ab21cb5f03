#pragma once

#include <Eigen/Dense>

#include "subsamp/models.hpp"

namespace subsamp {

struct FitResult {
  Eigen::VectorXd theta;
  bool converged = false;
  int iterations = 0;
  // Weighted-score infinity norm for smooth families; the subgradient
  // balance norm for the quantile family.
  double final_gradient_norm = 0.0;
};

struct FitOptions {
  double grad_tol = 1e-8;
  double theta_tol = 1e-8;
  int max_iter = 100;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
};

// Weighted M-estimation: minimizes sum_i w_i * loss(z_i, theta) over theta.
// Smooth families run damped Newton with backtracking; the quantile family
// runs IRLS on a smoothed check function with the smoothing parameter driven
// down to 1e-6. Throws on negative weights, fewer than q positively weighted
// rows, or a rank-deficient positive-weight design.
FitResult fit(const ModelFamily& family, const Eigen::MatrixXd& x_rows,
              const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
              const Eigen::VectorXd& theta_init, const FitOptions& opts = {});

// Convenience overload starting from theta = 0.
FitResult fit(const ModelFamily& family, const Eigen::MatrixXd& x_rows,
              const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
              const FitOptions& opts = {});

// sum_i w_i * loss(z_i, theta)
double empirical_risk(const ModelFamily& family, const Eigen::MatrixXd& x_rows,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                      const Eigen::VectorXd& theta);

}  // namespace subsamp
