#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace subsamp {

// The big dataset held fully in memory: response vector plus an N x p
// covariate matrix (column 0 may be an all-ones intercept). Immutable after
// construction and safe to share read-only across workers.
struct DataMatrix {
  std::int64_t n_rows = 0;
  Eigen::VectorXd response;
  Eigen::MatrixXd covariates;
  bool has_intercept = false;
  std::optional<std::string> family_hint;

  std::int64_t num_covariates() const { return covariates.cols(); }
};

// Centered auxiliary-statistic values h(Z_i) - h_bar with the uncentered
// full-data mean kept alongside. Column means of h_values are zero.
struct AuxStatistic {
  Eigen::MatrixXd h_values;  // N x d
  Eigen::VectorXd h_bar;     // d

  std::int64_t dim() const { return h_values.cols(); }
};

struct StandardizationParams {
  Eigen::VectorXd means;   // per covariate column (0 for intercept)
  Eigen::VectorXd scales;  // per covariate column (1 for intercept)
  bool standardized_response = false;
  double response_mean = 0.0;
  double response_scale = 1.0;
};

struct CsvSchema {
  int response_col = 0;             // zero-based index into the CSV row
  std::vector<int> covariate_cols;  // zero-based indices
  bool add_intercept = false;
  bool has_header = false;
};

// Loads a comma-separated numeric file. Malformed fields are reported with
// their 1-based data row and column; non-finite values are rejected.
DataMatrix load_csv(const std::string& path, const CsvSchema& schema);

// Centers and scales every non-intercept covariate column to mean 0 and
// sample standard deviation 1 (N-1 divisor); optionally the response too.
// A constant column is an error naming the column.
std::pair<DataMatrix, StandardizationParams> standardize(
    const DataMatrix& data, bool standardize_response);

enum class AuxKind { CenteredResponse, CenteredCovariate, CustomColumns };

struct AuxSpec {
  AuxKind kind = AuxKind::CenteredResponse;
  int covariate_index = 0;              // for CenteredCovariate
  std::vector<int> custom_columns;      // for CustomColumns (may be empty)
  static AuxSpec centered_response() { return {}; }
  static AuxSpec centered_covariate(int j) {
    return {AuxKind::CenteredCovariate, j, {}};
  }
  static AuxSpec custom(std::vector<int> cols) {
    return {AuxKind::CustomColumns, 0, std::move(cols)};
  }
};

// Single pass over the data; h_bar is the uncentered full-data mean and the
// returned columns are exactly centered.
AuxStatistic compute_aux(const DataMatrix& data, const AuxSpec& spec);

}  // namespace subsamp
