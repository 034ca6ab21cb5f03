#include "subsamp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace subsamp {

namespace {

void split_fields(const std::string& line, std::vector<std::string_view>& out) {
  out.clear();
  const char* begin = line.data();
  const char* end = begin + line.size();
  const char* field = begin;
  for (const char* p = begin; p <= end; ++p) {
    if (p == end || *p == ',') {
      out.emplace_back(field, static_cast<std::size_t>(p - field));
      field = p + 1;
    }
  }
}

double parse_field(std::string_view field, std::int64_t row, int col) {
  // Trim spaces and a possible trailing '\r'.
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
    field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' ||
                            field.back() == '\r'))
    field.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() ||
      !std::isfinite(value)) {
    throw std::runtime_error("malformed numeric field at row " +
                             std::to_string(row) + ", column " +
                             std::to_string(col + 1) + ": '" +
                             std::string(field) + "'");
  }
  return value;
}

}  // namespace

DataMatrix load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  if (schema.covariate_cols.empty() && !schema.add_intercept)
    throw std::invalid_argument("schema declares no covariate columns");

  int max_col = schema.response_col;
  for (int c : schema.covariate_cols) max_col = std::max(max_col, c);

  std::vector<double> resp;
  std::vector<double> covs;  // row-major staging
  const int p_data = static_cast<int>(schema.covariate_cols.size());

  std::string line;
  std::vector<std::string_view> fields;
  std::int64_t data_row = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && schema.has_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    split_fields(line, fields);
    ++data_row;
    if (static_cast<int>(fields.size()) <= max_col)
      throw std::runtime_error("row " + std::to_string(data_row) + " has " +
                               std::to_string(fields.size()) +
                               " fields, schema needs at least " +
                               std::to_string(max_col + 1));
    resp.push_back(parse_field(fields[schema.response_col], data_row,
                               schema.response_col));
    for (int c : schema.covariate_cols)
      covs.push_back(parse_field(fields[c], data_row, c));
  }
  if (data_row == 0) throw std::runtime_error("empty file: " + path);

  DataMatrix out;
  out.n_rows = data_row;
  out.response = Eigen::Map<Eigen::VectorXd>(resp.data(), data_row);
  const int p = p_data + (schema.add_intercept ? 1 : 0);
  out.covariates.resize(data_row, p);
  if (schema.add_intercept) out.covariates.col(0).setOnes();
  const int offset = schema.add_intercept ? 1 : 0;
  for (std::int64_t i = 0; i < data_row; ++i)
    for (int j = 0; j < p_data; ++j)
      out.covariates(i, offset + j) = covs[i * p_data + j];
  out.has_intercept = schema.add_intercept;
  return out;
}

std::pair<DataMatrix, StandardizationParams> standardize(
    const DataMatrix& data, bool standardize_response) {
  if (data.n_rows < 2)
    throw std::invalid_argument("standardize needs at least 2 rows");
  DataMatrix out = data;
  StandardizationParams params;
  const std::int64_t p = data.num_covariates();
  params.means = Eigen::VectorXd::Zero(p);
  params.scales = Eigen::VectorXd::Ones(p);

  const double denom = static_cast<double>(data.n_rows - 1);
  for (std::int64_t j = 0; j < p; ++j) {
    if (j == 0 && data.has_intercept) continue;  // intercept left untouched
    const double mean = data.covariates.col(j).mean();
    const double ss = (data.covariates.col(j).array() - mean).square().sum();
    const double sd = std::sqrt(ss / denom);
    if (sd <= 0.0)
      throw std::runtime_error("zero variance in column " + std::to_string(j));
    params.means[j] = mean;
    params.scales[j] = sd;
    out.covariates.col(j) = (data.covariates.col(j).array() - mean) / sd;
  }
  if (standardize_response) {
    const double mean = data.response.mean();
    const double ss = (data.response.array() - mean).square().sum();
    const double sd = std::sqrt(ss / denom);
    if (sd <= 0.0) throw std::runtime_error("zero variance in response");
    params.standardized_response = true;
    params.response_mean = mean;
    params.response_scale = sd;
    out.response = (data.response.array() - mean) / sd;
  }
  return {std::move(out), std::move(params)};
}

AuxStatistic compute_aux(const DataMatrix& data, const AuxSpec& spec) {
  std::vector<const double*> sources;
  switch (spec.kind) {
    case AuxKind::CenteredResponse:
      sources.push_back(data.response.data());
      break;
    case AuxKind::CenteredCovariate:
      if (spec.covariate_index < 0 ||
          spec.covariate_index >= data.num_covariates())
        throw std::invalid_argument("auxiliary covariate index out of range");
      sources.push_back(data.covariates.col(spec.covariate_index).data());
      break;
    case AuxKind::CustomColumns:
      for (int c : spec.custom_columns) {
        if (c < 0 || c >= data.num_covariates())
          throw std::invalid_argument("auxiliary column index out of range");
        sources.push_back(data.covariates.col(c).data());
      }
      break;
  }

  AuxStatistic aux;
  const std::int64_t d = static_cast<std::int64_t>(sources.size());
  const std::int64_t n = data.n_rows;
  aux.h_bar = Eigen::VectorXd::Zero(d);
  aux.h_values.resize(n, d);
  for (std::int64_t j = 0; j < d; ++j) {
    const Eigen::Map<const Eigen::VectorXd> col(sources[j], n);
    const double mean = col.mean();
    aux.h_bar[j] = mean;
    aux.h_values.col(j) = col.array() - mean;
  }
  return aux;
}

}  // namespace subsamp
