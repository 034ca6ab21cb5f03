#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "subsamp/dataset.hpp"

using namespace subsamp;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& content) {
    path = std::string(std::tmpnam(nullptr)) + ".csv";
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_csv with intercept") {
  TempCsv csv("y,x\n1,2\n0,3\n1,4\n");
  CsvSchema schema;
  schema.response_col = 0;
  schema.covariate_cols = {1};
  schema.add_intercept = true;
  schema.has_header = true;
  DataMatrix data = load_csv(csv.path, schema);
  CHECK(data.n_rows == 3);
  CHECK(data.covariates.rows() == 3);
  CHECK(data.covariates.cols() == 2);
  CHECK(data.covariates.col(0).isOnes());
  CHECK(data.covariates(1, 1) == 3.0);
  CHECK(data.response[2] == 1.0);
}

TEST_CASE("load_csv rejects NaN with the row") {
  TempCsv csv("1,NaN\n0,3\n");
  CsvSchema schema;
  schema.response_col = 0;
  schema.covariate_cols = {1};
  try {
    load_csv(csv.path, schema);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("load_csv errors") {
  TempCsv empty("");
  CsvSchema schema;
  schema.response_col = 0;
  schema.covariate_cols = {1};
  CHECK_THROWS(load_csv(empty.path, schema));

  TempCsv narrow("1\n2\n");
  CHECK_THROWS(load_csv(narrow.path, schema));
  CHECK_THROWS(load_csv("/nonexistent/file.csv", schema));
}

TEST_CASE("standardize centers and scales") {
  DataMatrix data;
  data.n_rows = 3;
  data.response = Eigen::Vector3d(1.0, 2.0, 3.0);
  data.covariates.resize(3, 2);
  data.covariates.col(0).setOnes();
  data.covariates.col(1) = Eigen::Vector3d(1.0, 2.0, 3.0);
  data.has_intercept = true;

  auto [std_data, params] = standardize(data, false);
  CHECK(std_data.covariates.col(0).isOnes());  // intercept untouched
  CHECK(std_data.covariates(0, 1) == doctest::Approx(-1.0));
  CHECK(std_data.covariates(1, 1) == doctest::Approx(0.0));
  CHECK(std_data.covariates(2, 1) == doctest::Approx(1.0));
  CHECK(params.means[1] == doctest::Approx(2.0));
  CHECK(params.scales[1] == doctest::Approx(1.0));  // N-1 divisor

  // Idempotence: standardizing twice equals standardizing once.
  auto [twice, params2] = standardize(std_data, false);
  CHECK((twice.covariates - std_data.covariates).lpNorm<Eigen::Infinity>() <=
        1e-10);
  (void)params2;
}

TEST_CASE("standardize rejects constant columns") {
  DataMatrix data;
  data.n_rows = 3;
  data.response = Eigen::Vector3d(1.0, 2.0, 3.0);
  data.covariates.resize(3, 1);
  data.covariates.col(0) = Eigen::Vector3d(5.0, 5.0, 5.0);
  data.has_intercept = false;
  try {
    standardize(data, false);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("column 0") != std::string::npos);
  }
}

TEST_CASE("compute_aux centered response") {
  DataMatrix data;
  data.n_rows = 3;
  data.response = Eigen::Vector3d(1.0, 0.0, 1.0);
  data.covariates = Eigen::MatrixXd::Ones(3, 1);
  AuxStatistic aux = compute_aux(data, AuxSpec::centered_response());
  CHECK(aux.dim() == 1);
  CHECK(aux.h_bar[0] == doctest::Approx(2.0 / 3.0));
  CHECK(aux.h_values(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(aux.h_values(1, 0) == doctest::Approx(-2.0 / 3.0));
  CHECK(std::fabs(aux.h_values.col(0).sum()) <= 1e-12 * 3);
}

TEST_CASE("compute_aux custom empty set degenerates to d=0") {
  DataMatrix data;
  data.n_rows = 2;
  data.response = Eigen::Vector2d(1.0, 2.0);
  data.covariates = Eigen::MatrixXd::Ones(2, 1);
  AuxStatistic aux = compute_aux(data, AuxSpec::custom({}));
  CHECK(aux.dim() == 0);
}

TEST_CASE("aux columns sum to zero for random input") {
  DataMatrix data;
  const int n = 1000;
  data.n_rows = n;
  data.response.resize(n);
  for (int i = 0; i < n; ++i) data.response[i] = std::sin(0.37 * i) * 13.0;
  data.covariates = Eigen::MatrixXd::Ones(n, 1);
  AuxStatistic aux = compute_aux(data, AuxSpec::centered_response());
  CHECK(std::fabs(aux.h_values.col(0).sum()) <= 1e-12 * n);
}
