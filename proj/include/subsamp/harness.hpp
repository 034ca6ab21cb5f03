#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subsamp/dataset.hpp"
#include "subsamp/design.hpp"
#include "subsamp/elw.hpp"
#include "subsamp/estimators.hpp"
#include "subsamp/sizing.hpp"

namespace subsamp {

struct SimConfig {
  std::string example = "logistic";  // poisson | logistic | quantile
  int case_id = 1;
  std::int64_t n = 50000;
  std::int64_t r0 = 200;
  std::vector<std::int64_t> r_values;
  int repetitions = 300;
  Criterion criterion = Criterion::A;
  std::vector<EstimatorKind> estimators = {
      EstimatorKind::Unif, EstimatorKind::Ipw, EstimatorKind::Elw,
      EstimatorKind::Elwai};
  std::uint64_t seed = 1;
  ElwMode mode = ElwMode::Standard;
  bool regenerate_data = false;  // fresh dataset per repetition
  int threads = 0;               // 0 = hardware concurrency
};

// One (estimator, r) cell of a comparison run. Metrics are averaged over
// successful repetitions; failures are counted separately.
struct CellResult {
  EstimatorKind kind = EstimatorKind::Unif;
  std::int64_t r = 0;
  double mse = 0.0;
  double mean_n = 0.0;
  // Mean of the plan's own expected size sum(phi). The clipped plan
  // normalizes on the pilot, so this drifts from r0 + r when the pilot is
  // noisy; it is reported rather than re-normalized.
  double mean_expected_n = 0.0;
  double fallback_rate = 0.0;
  int failures = 0;
  int successes = 0;
  double wall_ms = 0.0;
};

struct RunResult {
  Eigen::VectorXd theta_full;
  std::vector<CellResult> cells;
  int total_failures = 0;
};

// Synthetic datasets of the three simulation examples. family_out/theta0_out
// receive the generating family and true parameter when non-null.
DataMatrix generate_example(const std::string& example, int case_id,
                            std::int64_t n, std::uint64_t seed,
                            ModelFamily* family_out = nullptr,
                            Eigen::VectorXd* theta0_out = nullptr);

ModelFamily example_family(const std::string& example, int case_id);

// Monte Carlo comparison of the configured estimators on a generated
// dataset: for each repetition and each r, a pilot capture at r0/N, the
// nearly optimal plan per estimator, the capture-recapture draw and the fit.
// MSE is accumulated against the full-data fit.
RunResult run_comparison(const SimConfig& config);

// Same pipeline on caller-supplied data (already standardized).
RunResult run_pipeline(const DataMatrix& data, const AuxStatistic* aux,
                       const ModelFamily& family,
                       const Eigen::VectorXd& theta_reference,
                       const SimConfig& config);

struct AnalyzeConfig {
  std::string csv_path;
  CsvSchema schema;
  ModelFamily family;
  bool standardize_response = false;
  AuxSpec aux = AuxSpec::centered_response();
  bool use_aux = true;
  SimConfig sim;  // r grid, repetitions, seed, criterion, estimators
};

// Loads a CSV, standardizes it, fits the full data and (when r values are
// configured) runs the comparison pipeline against that reference fit.
RunResult analyze_csv(const AnalyzeConfig& config);

struct SizingEvalConfig {
  SimConfig base;          // example/case/n/r0/seed/reps/criterion/mode
  PrecisionSpec::Kind kind = PrecisionSpec::Kind::R1;
  double confidence_a = 0.05;      // R2 only
  std::vector<double> grid;        // explicit c0 or d values; empty = auto
  int cells = 10;                  // auto grid size
  double target_r_low = 300.0;     // auto grid spans these second sizes
  double target_r_high = 2000.0;
};

struct SizingEvalCell {
  int cell = 0;
  double requirement = 0.0;  // c0 or d
  EstimatorKind kind = EstimatorKind::Elw;
  double mse = 0.0;
  double ratio = 0.0;     // mse / c0 (R1 only)
  double coverage = 0.0;  // empirical coverage (R2 only)
  double mean_n0 = 0.0;
  double mean_r = 0.0;
  int failures = 0;
};

// Sizing evaluation: per repetition the pilot determines n0 via M1/M2 for
// the ELW method; all estimators then run at that size and the MSE/C0 ratio
// (R1) or the empirical coverage of {theta : ||theta_hat - theta|| <= d}
// (R2) is reported per grid cell.
std::vector<SizingEvalCell> run_sizing_eval(const SizingEvalConfig& config);

// Deterministic output writers ("%.17g" floats, fixed row order).
void write_results_csv(const std::string& path, const RunResult& result);
void write_sizing_csv(const std::string& path,
                      const std::vector<SizingEvalCell>& cells,
                      PrecisionSpec::Kind kind);
void write_manifest(const std::string& path, const SimConfig& config,
                    const RunResult& result, const std::string& command,
                    double wall_ms);

std::string format_double(double value);

}  // namespace subsamp
