#include "subsamp/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace subsamp {

namespace {

void check_dims(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& theta) {
  if (x.size() != theta.size())
    throw std::invalid_argument("dimension mismatch: x has " +
                                std::to_string(x.size()) + ", theta has " +
                                std::to_string(theta.size()));
}

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

ModelFamily ModelFamily::quantile(double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("quantile level must be in (0,1)");
  return {FamilyKind::Quantile, tau};
}

ModelFamily ModelFamily::parse(const std::string& text) {
  if (text == "poisson") return poisson();
  if (text == "logistic") return logistic();
  if (text == "ols") return least_squares();
  if (text.rfind("quantile:", 0) == 0)
    return quantile(std::stod(text.substr(9)));
  throw std::invalid_argument("unknown family '" + text +
                              "' (expected poisson|logistic|ols|quantile:<tau>)");
}

std::string ModelFamily::name() const {
  switch (kind) {
    case FamilyKind::Poisson: return "poisson";
    case FamilyKind::Logistic: return "logistic";
    case FamilyKind::LeastSquares: return "ols";
    case FamilyKind::Quantile: return "quantile:" + std::to_string(tau);
  }
  return "?";
}

double clamped_exp(double t) {
  return std::exp(std::clamp(t, -kExpClamp, kExpClamp));
}

double expit(double t) {
  t = std::clamp(t, -kExpClamp, kExpClamp);
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double loss(const ModelFamily& family, double y,
            const Eigen::Ref<const Eigen::VectorXd>& x,
            const Eigen::Ref<const Eigen::VectorXd>& theta) {
  check_dims(x, theta);
  const double u = x.dot(theta);
  switch (family.kind) {
    case FamilyKind::Poisson:
      return -y * u + clamped_exp(u);  // log(y!) dropped
    case FamilyKind::Logistic: {
      // log(1 + e^u) evaluated without overflow
      const double softplus = (u > 0.0) ? u + std::log1p(std::exp(-u))
                                        : std::log1p(std::exp(u));
      return -y * u + softplus;
    }
    case FamilyKind::LeastSquares: {
      const double r = y - u;
      return r * r;
    }
    case FamilyKind::Quantile: {
      const double r = y - u;
      return r * (family.tau - (r < 0.0 ? 1.0 : 0.0));
    }
  }
  return 0.0;
}

Eigen::VectorXd score(const ModelFamily& family, double y,
                      const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& theta) {
  check_dims(x, theta);
  const double u = x.dot(theta);
  double factor = 0.0;
  switch (family.kind) {
    case FamilyKind::Poisson:
      factor = clamped_exp(u) - y;
      break;
    case FamilyKind::Logistic:
      factor = expit(u) - y;
      break;
    case FamilyKind::LeastSquares:
      factor = -2.0 * (y - u);
      break;
    case FamilyKind::Quantile: {
      const double r = y - u;
      factor = -(family.tau - (r < 0.0 ? 1.0 : 0.0));
      break;
    }
  }
  return factor * x;
}

Eigen::MatrixXd score_rows(const ModelFamily& family,
                           const Eigen::MatrixXd& x_rows,
                           const Eigen::VectorXd& y,
                           const Eigen::VectorXd& theta) {
  if (x_rows.cols() != theta.size() || x_rows.rows() != y.size())
    throw std::invalid_argument("score_rows: dimension mismatch");
  const Eigen::VectorXd u = x_rows * theta;
  Eigen::VectorXd factor(u.size());
  switch (family.kind) {
    case FamilyKind::Poisson:
      for (Eigen::Index i = 0; i < u.size(); ++i)
        factor[i] = clamped_exp(u[i]) - y[i];
      break;
    case FamilyKind::Logistic:
      for (Eigen::Index i = 0; i < u.size(); ++i)
        factor[i] = expit(u[i]) - y[i];
      break;
    case FamilyKind::LeastSquares:
      factor = -2.0 * (y - u);
      break;
    case FamilyKind::Quantile:
      for (Eigen::Index i = 0; i < u.size(); ++i)
        factor[i] = -(family.tau - (y[i] - u[i] < 0.0 ? 1.0 : 0.0));
      break;
  }
  return factor.asDiagonal() * x_rows;
}

VEstimate estimate_v(const ModelFamily& family, const Eigen::MatrixXd& x_rows,
                     const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
  const Eigen::Index m = x_rows.rows();
  const Eigen::Index q = x_rows.cols();
  if (m < q + 1)
    throw std::invalid_argument("estimate_v needs at least q+1 rows");
  if (q != theta.size())
    throw std::invalid_argument("estimate_v: theta dimension mismatch");

  VEstimate out;
  Eigen::VectorXd weight(m);
  const Eigen::VectorXd u = x_rows * theta;
  switch (family.kind) {
    case FamilyKind::Poisson:
      for (Eigen::Index i = 0; i < m; ++i) weight[i] = clamped_exp(u[i]);
      break;
    case FamilyKind::Logistic:
      for (Eigen::Index i = 0; i < m; ++i) {
        const double p = expit(u[i]);
        weight[i] = p * (1.0 - p);
      }
      break;
    case FamilyKind::LeastSquares:
      weight.setOnes();
      break;
    case FamilyKind::Quantile: {
      // Powell-style kernel estimator with a standard normal kernel.
      std::vector<double> res(static_cast<std::size_t>(m));
      for (Eigen::Index i = 0; i < m; ++i) res[i] = y[i] - u[i];
      std::vector<double> absdev = res;
      const double med = median_inplace(absdev);
      for (auto& r : absdev) r = std::fabs(r - med);
      double sigma = 1.4826 * median_inplace(absdev);
      if (sigma <= 0.0) {
        // Degenerate residual spread; fall back to the plain std deviation.
        double mean = 0.0, ss = 0.0;
        for (double r : res) mean += r;
        mean /= static_cast<double>(m);
        for (double r : res) ss += (r - mean) * (r - mean);
        sigma = std::sqrt(ss / std::max<double>(1.0, double(m) - 1.0));
        if (sigma <= 0.0) sigma = 1.0;
      }
      const double h =
          1.06 * sigma * std::pow(static_cast<double>(m), -0.2);
      const double norm = 1.0 / std::sqrt(2.0 * M_PI);
      for (Eigen::Index i = 0; i < m; ++i) {
        const double z = res[static_cast<std::size_t>(i)] / h;
        weight[i] = norm * std::exp(-0.5 * z * z) / h;
      }
      out.bandwidth = h;
      out.has_bandwidth = true;
      break;
    }
  }

  out.matrix = (x_rows.transpose() * weight.asDiagonal() * x_rows) /
               static_cast<double>(m);
  // Exact symmetrization; the product above is symmetric up to rounding.
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.matrix);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  out.singular = !(out.min_eigenvalue > 0.0);
  return out;
}

}  // namespace subsamp
