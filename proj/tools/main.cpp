// Command-line front end: simulate / analyze / samplesize / compare.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "subsamp/harness.hpp"
#include "subsamp/kernels.hpp"

namespace {

using namespace subsamp;

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::vector<EstimatorKind> parse_estimators(const std::string& text) {
  std::vector<EstimatorKind> kinds;
  for (const std::string& name : split_commas(text))
    kinds.push_back(parse_estimator(name));
  if (kinds.empty()) throw CLI::ValidationError("--estimators is empty");
  return kinds;
}

PrecisionSpec parse_requirement(const std::string& text) {
  if (text.rfind("mse:", 0) == 0)
    return PrecisionSpec::mse(std::stod(text.substr(4)));
  if (text.rfind("abserr:", 0) == 0) {
    const auto parts = split_commas(text.substr(7));
    if (parts.size() != 2)
      throw CLI::ValidationError("--requirement abserr needs <d>,<a>");
    return PrecisionSpec::abserr(std::stod(parts[0]), std::stod(parts[1]));
  }
  throw CLI::ValidationError(
      "--requirement must be mse:<C0> or abserr:<d>,<a>");
}

struct CommonFlags {
  std::string example = "logistic";
  int case_id = 1;
  std::int64_t n = 50000;
  std::int64_t r0 = 200;
  std::vector<std::int64_t> r_values;
  int reps = 300;
  std::string criterion = "A";
  std::string estimators = "unif,ipw,elw,elwai";
  std::uint64_t seed = 1;
  std::string mode = "standard";
  int threads = 0;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_example) {
  if (with_example) {
    cmd->add_option("--example", f.example,
                    "Synthetic example: poisson|logistic|quantile");
    cmd->add_option("--case", f.case_id, "Scenario 1..4")
        ->check(CLI::Range(1, 4));
    cmd->add_option("--n", f.n, "Dataset size N");
  }
  cmd->add_option("--r0", f.r0, "Expected first-capture (pilot) size");
  cmd->add_option("--r", f.r_values, "Second-capture expected size (repeatable)");
  cmd->add_option("--reps", f.reps, "Monte Carlo repetitions");
  cmd->add_option("--criterion", f.criterion, "Design criterion A|L");
  cmd->add_option("--estimators", f.estimators,
                  "Comma list of unif,ipw,elw,elwai");
  cmd->add_option("--seed", f.seed, "64-bit RNG seed");
  cmd->add_option("--mode", f.mode, "ELW mode: standard|negligible");
  cmd->add_option("--threads", f.threads, "Worker threads (0 = auto)");
  cmd->add_option("--out", f.out_dir, "Output directory");
}

SimConfig to_sim_config(const CommonFlags& f) {
  SimConfig cfg;
  cfg.example = f.example;
  cfg.case_id = f.case_id;
  cfg.n = f.n;
  cfg.r0 = f.r0;
  cfg.r_values = f.r_values;
  cfg.repetitions = f.reps;
  cfg.criterion = parse_criterion(f.criterion);
  cfg.estimators = parse_estimators(f.estimators);
  cfg.seed = f.seed;
  cfg.mode = (f.mode == "negligible") ? ElwMode::Negligible : ElwMode::Standard;
  cfg.threads = f.threads;
  return cfg;
}

AuxSpec parse_aux(const std::string& text, bool* use_aux) {
  *use_aux = true;
  if (text == "response") return AuxSpec::centered_response();
  if (text == "none") {
    *use_aux = false;
    return AuxSpec::custom({});
  }
  if (text.rfind("covariate:", 0) == 0)
    return AuxSpec::centered_covariate(std::stoi(text.substr(10)));
  throw CLI::ValidationError("--aux must be response|covariate:<j>|none");
}

int finish_run(const SimConfig& cfg, const RunResult& result,
               const std::string& out_dir, const std::string& command,
               double wall_ms) {
  std::filesystem::create_directories(out_dir);
  write_results_csv(out_dir + "/results.csv", result);
  write_manifest(out_dir + "/manifest.json", cfg, result, command, wall_ms);
  std::cout << command << ": " << result.cells.size() << " cells, "
            << result.total_failures << " failed repetitions -> " << out_dir
            << "/results.csv\n";
  return result.total_failures > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capture-recapture subsampling with EL weighting"};
  app.require_subcommand(1);
  bool force_scalar = false;
  app.add_flag("--no-simd", force_scalar, "Force scalar kernels");

  // simulate
  CommonFlags sim_flags;
  bool regen = false;
  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo comparison");
  add_common(sim, sim_flags, true);
  sim->add_flag("--regen-data", regen, "Fresh dataset per repetition");

  // analyze
  CommonFlags an_flags;
  std::string csv_path, family_text = "ols", aux_text = "response";
  std::string covariate_cols;
  int response_col = 0;
  bool intercept = false, header = false, std_response = false;
  CLI::App* an = app.add_subcommand("analyze", "Run the pipeline on a CSV");
  an->add_option("--csv", csv_path, "Input CSV path")->required();
  an->add_option("--response-col", response_col, "Response column (0-based)");
  an->add_option("--covariate-cols", covariate_cols,
                 "Comma list of covariate columns (0-based)")
      ->required();
  an->add_flag("--intercept", intercept, "Prepend an intercept column");
  an->add_flag("--header", header, "Skip a single header row");
  an->add_option("--family", family_text,
                 "poisson|logistic|ols|quantile:<tau>");
  an->add_flag("--standardize-response", std_response,
               "Standardize the response as well");
  an->add_option("--aux", aux_text, "response|covariate:<j>|none");
  add_common(an, an_flags, false);

  // samplesize
  CommonFlags sz_flags;
  std::string requirement_text;
  std::string sz_csv, sz_family = "ols", sz_cols;
  int sz_response_col = 0;
  bool sz_intercept = false, sz_header = false, sz_std_resp = false;
  CLI::App* sz = app.add_subcommand("samplesize",
                                    "Minimal sample size for a precision");
  sz->add_option("--requirement", requirement_text,
                 "mse:<C0> or abserr:<d>,<a>")
      ->required();
  sz->add_option("--csv", sz_csv, "CSV input (otherwise synthetic example)");
  sz->add_option("--response-col", sz_response_col, "Response column");
  sz->add_option("--covariate-cols", sz_cols, "Covariate columns");
  sz->add_flag("--intercept", sz_intercept, "Prepend an intercept column");
  sz->add_flag("--header", sz_header, "Skip a single header row");
  sz->add_option("--family", sz_family, "Model family for CSV input");
  sz->add_flag("--standardize-response", sz_std_resp,
               "Standardize the response as well");
  add_common(sz, sz_flags, true);

  // compare
  CommonFlags cp_flags;
  std::string method = "m1";
  std::vector<double> grid_values;
  int cells = 10;
  double r_low = 300.0, r_high = 2000.0, confidence_a = 0.05;
  bool cp_regen = false;
  CLI::App* cp = app.add_subcommand(
      "compare", "Evaluate sizing methods over a requirement grid");
  cp->add_option("--method", method, "m1 (MSE ratio) or m2 (coverage)");
  cp->add_flag("--regen-data", cp_regen,
               "Fresh dataset per repetition (unconditional coverage)");
  cp->add_option("--requirement-values", grid_values,
                 "Explicit C0 or d grid (otherwise auto)");
  cp->add_option("--cells", cells, "Auto grid size");
  cp->add_option("--r-low", r_low, "Auto grid lower second-capture size");
  cp->add_option("--r-high", r_high, "Auto grid upper second-capture size");
  cp->add_option("--alpha", confidence_a, "Confidence level a for m2");
  add_common(cp, cp_flags, true);

  CLI11_PARSE(app, argc, argv);
  if (force_scalar) kernels::set_mode(kernels::Mode::Scalar);

  try {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ms = [&t0] {
      return std::chrono::duration<double, std::milli>(
                 std::chrono::steady_clock::now() - t0)
          .count();
    };

    if (sim->parsed()) {
      SimConfig cfg = to_sim_config(sim_flags);
      cfg.regenerate_data = regen;
      if (cfg.r_values.empty()) cfg.r_values = {300, 500, 1000, 2000};
      RunResult result = run_comparison(cfg);
      return finish_run(cfg, result, sim_flags.out_dir, "simulate",
                        elapsed_ms());
    }

    if (an->parsed()) {
      AnalyzeConfig cfg;
      cfg.csv_path = csv_path;
      cfg.schema.response_col = response_col;
      for (const std::string& c : split_commas(covariate_cols))
        cfg.schema.covariate_cols.push_back(std::stoi(c));
      cfg.schema.add_intercept = intercept;
      cfg.schema.has_header = header;
      cfg.family = ModelFamily::parse(family_text);
      cfg.standardize_response = std_response;
      cfg.aux = parse_aux(aux_text, &cfg.use_aux);
      cfg.sim = to_sim_config(an_flags);
      cfg.sim.example = "csv";
      RunResult result = analyze_csv(cfg);
      std::cout << "full-data fit:";
      for (Eigen::Index i = 0; i < result.theta_full.size(); ++i)
        std::cout << " " << format_double(result.theta_full[i]);
      std::cout << "\n";
      return finish_run(cfg.sim, result, an_flags.out_dir, "analyze",
                        elapsed_ms());
    }

    if (sz->parsed()) {
      PrecisionSpec spec = parse_requirement(requirement_text);
      DataMatrix data;
      ModelFamily family = ModelFamily::parse(sz_family);
      if (!sz_csv.empty()) {
        CsvSchema schema;
        schema.response_col = sz_response_col;
        for (const std::string& c : split_commas(sz_cols))
          schema.covariate_cols.push_back(std::stoi(c));
        schema.add_intercept = sz_intercept;
        schema.has_header = sz_header;
        auto [std_data, params] =
            standardize(load_csv(sz_csv, schema), sz_std_resp);
        (void)params;
        data = std::move(std_data);
      } else {
        data = generate_example(sz_flags.example, sz_flags.case_id, sz_flags.n,
                                sz_flags.seed, &family, nullptr);
      }
      const double alpha10 = static_cast<double>(sz_flags.r0) /
                             static_cast<double>(data.n_rows);
      RngStream pilot_stream = RngStream::derive(sz_flags.seed, 0x51);
      std::vector<std::uint8_t> d1 = poisson_draw(
          Eigen::VectorXd::Constant(data.n_rows, alpha10), pilot_stream);
      std::vector<std::int64_t> rows;
      for (std::int64_t i = 0; i < data.n_rows; ++i)
        if (d1[static_cast<std::size_t>(i)]) rows.push_back(i);
      SizingContext ctx;
      ctx.pilot = make_pilot_context(data, nullptr, rows, family,
                                     parse_criterion(sz_flags.criterion),
                                     PlanTarget::Elw);
      ctx.n_total = data.n_rows;
      ctx.alpha10 = alpha10;
      SizeResult res = determine_size(ctx, spec);

      nlohmann::ordered_json j;
      j["method"] = spec.kind == PrecisionSpec::Kind::R1 ? "m1" : "m2";
      j["requirement"] = requirement_text;
      j["n0"] = res.n0;
      j["r_second"] = res.r_second;
      if (res.has_nu_star) j["nu_star"] = res.nu_star;
      j["iterations"] = res.iterations;
      j["clipped"] = res.clipped;
      j["pilot_size"] = rows.size();
      j["seed"] = sz_flags.seed;
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (cp->parsed()) {
      SizingEvalConfig cfg;
      cfg.base = to_sim_config(cp_flags);
      cfg.base.regenerate_data = cp_regen;
      cfg.kind = (method == "m2") ? PrecisionSpec::Kind::R2
                                  : PrecisionSpec::Kind::R1;
      cfg.confidence_a = confidence_a;
      cfg.grid = grid_values;
      cfg.cells = cells;
      cfg.target_r_low = r_low;
      cfg.target_r_high = r_high;
      std::vector<SizingEvalCell> rows = run_sizing_eval(cfg);
      std::filesystem::create_directories(cp_flags.out_dir);
      write_sizing_csv(cp_flags.out_dir + "/sizing_eval.csv", rows, cfg.kind);
      int failures = 0;
      for (const auto& row : rows) failures += row.failures;
      RunResult dummy;
      dummy.theta_full = Eigen::VectorXd::Zero(0);
      dummy.total_failures = failures;
      write_manifest(cp_flags.out_dir + "/manifest.json", cfg.base, dummy,
                     "compare", elapsed_ms());
      std::cout << "compare: " << rows.size() << " rows -> "
                << cp_flags.out_dir << "/sizing_eval.csv\n";
      return failures > 0 ? 2 : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
