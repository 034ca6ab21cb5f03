#pragma once

#include <Eigen/Dense>
#include <string>

namespace subsamp {

enum class FamilyKind { Poisson, Logistic, LeastSquares, Quantile };

// Regression family: loss, score and the curvature matrix V. The Poisson
// loss drops the log(y!) term (constant in theta), so reported loss values
// are comparable only within a run.
struct ModelFamily {
  FamilyKind kind = FamilyKind::LeastSquares;
  double tau = 0.5;  // quantile level, Quantile only

  static ModelFamily poisson() { return {FamilyKind::Poisson, 0.0}; }
  static ModelFamily logistic() { return {FamilyKind::Logistic, 0.0}; }
  static ModelFamily least_squares() { return {FamilyKind::LeastSquares, 0.0}; }
  static ModelFamily quantile(double tau);

  // Accepts "poisson", "logistic", "ols", "quantile:<tau>".
  static ModelFamily parse(const std::string& text);
  std::string name() const;

  bool smooth() const { return kind != FamilyKind::Quantile; }
};

// Exponent clamping bound for exp/expit evaluation.
inline constexpr double kExpClamp = 30.0;

double clamped_exp(double t);
double expit(double t);  // overflow-safe logistic function

double loss(const ModelFamily& family, double y,
            const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& theta);

Eigen::VectorXd score(const ModelFamily& family, double y,
                      const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& theta);

// Score rows for every observation: out is n x q.
Eigen::MatrixXd score_rows(const ModelFamily& family,
                           const Eigen::MatrixXd& x_rows,
                           const Eigen::VectorXd& y,
                           const Eigen::VectorXd& theta);

struct VEstimate {
  Eigen::MatrixXd matrix;
  double bandwidth = 0.0;     // h_m, quantile only
  bool has_bandwidth = false;
  bool singular = false;      // smallest eigenvalue <= 0
  double min_eigenvalue = 0.0;
};

// Sample-mean plug-in of the family's V at theta_pilot over the given rows;
// the quantile family uses the Gaussian-kernel density estimator with
// bandwidth 1.06 * (1.4826 * MAD of residuals) * m^(-1/5).
VEstimate estimate_v(const ModelFamily& family, const Eigen::MatrixXd& x_rows,
                     const Eigen::VectorXd& y, const Eigen::VectorXd& theta);

}  // namespace subsamp
