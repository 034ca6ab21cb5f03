#include <doctest.h>

#include <cmath>

#include "subsamp/harness.hpp"
#include "subsamp/rng.hpp"
#include "subsamp/solver.hpp"

using namespace subsamp;

namespace {

struct Problem {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
};

Problem random_problem(int n, int q, std::uint64_t seed) {
  RngStream g(seed);
  Problem p;
  p.x.resize(n, q);
  p.y.resize(n);
  p.w.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < q; ++j) p.x(i, j) = g.next_normal();
    p.y[i] = p.x.row(i).sum() * 0.3 + g.next_normal();
    p.w[i] = 0.2 + g.next_double();
  }
  return p;
}

}  // namespace

TEST_CASE("least squares equals the normal-equation solution") {
  Problem p = random_problem(200, 4, 11);
  FitResult res = fit(ModelFamily::least_squares(), p.x, p.y, p.w);
  CHECK(res.converged);
  const Eigen::MatrixXd xtwx = p.x.transpose() * p.w.asDiagonal() * p.x;
  const Eigen::VectorXd xtwy = p.x.transpose() * (p.w.cwiseProduct(p.y));
  const Eigen::VectorXd closed = xtwx.ldlt().solve(xtwy);
  CHECK((res.theta - closed).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("weighted score vanishes at the optimum for smooth families") {
  Problem p = random_problem(300, 3, 17);
  for (const ModelFamily family :
       {ModelFamily::least_squares(), ModelFamily::logistic(),
        ModelFamily::poisson()}) {
    Eigen::VectorXd y = p.y;
    if (family.kind == FamilyKind::Logistic)
      for (int i = 0; i < y.size(); ++i) y[i] = (y[i] > 0.0) ? 1.0 : 0.0;
    if (family.kind == FamilyKind::Poisson)
      for (int i = 0; i < y.size(); ++i) y[i] = std::floor(std::fabs(y[i]));
    FitResult res = fit(family, p.x, y, p.w);
    CHECK(res.converged);
    CHECK(res.final_gradient_norm <= 1e-8);
  }
}

TEST_CASE("full-data Poisson fit recovers theta0 at N=50000") {
  ModelFamily family;
  Eigen::VectorXd theta0;
  DataMatrix data = generate_example("poisson", 1, 50000, 5, &family, &theta0);
  FitResult res = fit(family, data.covariates, data.response,
                      Eigen::VectorXd::Ones(data.n_rows));
  CHECK(res.converged);
  // Poisson ML: Var(theta_hat) ~ V^-1/N with V the plug-in curvature.
  VEstimate v = estimate_v(family, data.covariates, data.response, res.theta);
  const Eigen::MatrixXd cov =
      v.matrix.ldlt().solve(Eigen::MatrixXd::Identity(7, 7)) /
      static_cast<double>(data.n_rows);
  for (int j = 0; j < 7; ++j) {
    const double se = std::sqrt(cov(j, j));
    CHECK(std::fabs(res.theta[j] - theta0[j]) <= 3.0 * se);
  }
}

TEST_CASE("rank-deficient and invalid weights throw") {
  Problem p = random_problem(50, 3, 23);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(50);
  w[0] = 1.0;  // a single positive-weight row cannot identify 3 parameters
  CHECK_THROWS_WITH_AS(
      fit(ModelFamily::least_squares(), p.x, p.y, w),
      "rank deficient: fewer positive-weight rows than parameters",
      std::runtime_error);
  Eigen::VectorXd neg = Eigen::VectorXd::Ones(50);
  neg[3] = -0.5;
  CHECK_THROWS_AS(fit(ModelFamily::least_squares(), p.x, p.y, neg),
                  std::invalid_argument);

  // duplicated column -> rank deficient design
  Eigen::MatrixXd xdup(50, 2);
  xdup.col(0) = p.x.col(0);
  xdup.col(1) = p.x.col(0);
  CHECK_THROWS(fit(ModelFamily::least_squares(), xdup, p.y,
                   Eigen::VectorXd::Ones(50)));
}

TEST_CASE("scale equivariance of the weights") {
  Problem p = random_problem(150, 3, 29);
  Eigen::VectorXd y = p.y;
  for (int i = 0; i < y.size(); ++i) y[i] = (y[i] > 0.0) ? 1.0 : 0.0;
  FitResult base = fit(ModelFamily::logistic(), p.x, y, p.w);
  FitResult scaled =
      fit(ModelFamily::logistic(), p.x, y, (37.5 * p.w).eval());
  CHECK((base.theta - scaled.theta).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("empirical risk basics and local optimality") {
  Problem p = random_problem(120, 3, 31);
  const ModelFamily family = ModelFamily::least_squares();
  CHECK(empirical_risk(family, p.x, p.y, Eigen::VectorXd::Zero(120),
                       Eigen::VectorXd::Zero(3)) == 0.0);
  // weights 1/n reproduce the sample-mean risk
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(120, 1.0 / 120.0);
  double direct = 0.0;
  for (int i = 0; i < 120; ++i)
    direct += loss(family, p.y[i], p.x.row(i), Eigen::VectorXd::Zero(3));
  CHECK(empirical_risk(family, p.x, p.y, uniform, Eigen::VectorXd::Zero(3)) ==
        doctest::Approx(direct / 120.0));

  FitResult res = fit(family, p.x, p.y, p.w);
  const double at_opt = empirical_risk(family, p.x, p.y, p.w, res.theta);
  RngStream g(77);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd delta(3);
    for (int j = 0; j < 3; ++j) delta[j] = g.next_normal();
    delta *= 1e-3 / delta.norm();
    CHECK(at_opt <= empirical_risk(family, p.x, p.y, p.w,
                                   (res.theta + delta).eval()) +
                        1e-12);
  }
}

TEST_CASE("quantile fit satisfies the subgradient balance") {
  RngStream g(41);
  const int n = 400, q = 3;
  Eigen::MatrixXd x(n, q);
  Eigen::VectorXd y(n), w(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (int j = 1; j < q; ++j) x(i, j) = g.next_normal();
    y[i] = x.row(i).sum() * 0.5 + g.next_normal();
    w[i] = 0.5 + g.next_double();
  }
  for (double tau : {0.25, 0.5, 0.9}) {
    FitResult res = fit(ModelFamily::quantile(tau), x, y, w);
    CHECK(res.converged);
    double max_wx = 0.0;
    for (int i = 0; i < n; ++i)
      max_wx = std::max(max_wx, w[i] * x.row(i).lpNorm<Eigen::Infinity>());
    CHECK(res.final_gradient_norm <= max_wx + 1e-8);
  }
}

TEST_CASE("quantile fit tracks the generating quantile line") {
  RngStream g(43);
  const int n = 20000;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = g.next_normal();
    y[i] = 1.0 - 0.5 * x(i, 1) + g.next_normal();
  }
  FitResult res =
      fit(ModelFamily::quantile(0.75), x, y, Eigen::VectorXd::Ones(n));
  CHECK(res.theta[0] ==
        doctest::Approx(1.0 + 0.6744897501960817).epsilon(0.05));
  CHECK(res.theta[1] == doctest::Approx(-0.5).epsilon(0.05));
}
