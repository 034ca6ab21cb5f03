#include "subsamp/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "subsamp/kernels.hpp"
#include "subsamp/rng.hpp"

namespace subsamp {

namespace {

constexpr std::uint64_t kDatasetStream = 0xD5;
constexpr std::uint64_t kCalibrationStream = 0xCA;

// Stream id for (r-block, purpose) within a repetition.
enum Purpose : std::uint64_t {
  kPilotDraw = 1,
  // One shared second-capture stream per repetition: each estimator
  // thresholds its own plan against common uniforms, which pairs the
  // method comparison (common random numbers) without biasing any column.
  kSecondShared = 2,
  kUnifDraw = 5,
};

std::uint64_t stream_id(std::uint64_t block, Purpose purpose) {
  return (block << 4) | static_cast<std::uint64_t>(purpose);
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  int n_threads = threads > 0
                      ? threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min(n_threads, count);
  if (n_threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += n_threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

struct PilotDraw {
  std::vector<std::uint8_t> d1;
  std::vector<std::int64_t> rows;
};

PilotDraw draw_pilot(std::int64_t n, double alpha10, RngStream stream) {
  PilotDraw out;
  out.d1 = poisson_draw(Eigen::VectorXd::Constant(n, alpha10), stream);
  for (std::int64_t i = 0; i < n; ++i)
    if (out.d1[static_cast<std::size_t>(i)]) out.rows.push_back(i);
  return out;
}

struct KindOutcome {
  bool ok = false;
  Eigen::VectorXd theta;
  double n = 0.0;
  double expected_n = 0.0;  // sum of phi under the realized plan
  bool fallback = false;
};

// One estimator at one repetition. `pilot`/`base_ctx`/`a_full` are shared
// across the pilot-based kinds; Unif draws its own single-phase sample.
KindOutcome run_kind(EstimatorKind kind, const DataMatrix& data,
                     const AuxStatistic* aux, const ModelFamily& family,
                     ElwMode mode, double alpha10, double alpha20,
                     std::uint64_t rep_seed, std::uint64_t block,
                     const PilotDraw* pilot, const PilotContext* base_ctx,
                     const Eigen::MatrixXd* a_full) {
  KindOutcome out;
  const std::int64_t n_units = data.n_rows;
  const double alpha0 = 1.0 - (1.0 - alpha10) * (1.0 - alpha20);

  if (kind == EstimatorKind::Unif) {
    const double rate = std::min(alpha10 + alpha20, 1.0);  // r0 + r total
    RngStream stream =
        RngStream::derive(rep_seed, stream_id(block, kUnifDraw));
    SamplingPlan plan = SamplingPlan::uniform(n_units, rate, 0.0);
    std::vector<std::uint8_t> d1 =
        poisson_draw(Eigen::VectorXd::Constant(n_units, rate), stream);
    std::vector<std::uint8_t> d2(static_cast<std::size_t>(n_units), 0);
    CaptureSample sample = combine_captures(plan, std::move(d1), std::move(d2));
    FitResult fit = estimate(kind, sample, data, aux, family, alpha0,
                             Eigen::VectorXd::Zero(data.num_covariates()));
    out.n = static_cast<double>(sample.n);
    out.expected_n = rate * static_cast<double>(n_units);
    if (!fit.converged) return out;
    out.theta = std::move(fit.theta);
    out.ok = true;
    return out;
  }

  // Pilot-based kinds: per-kind pilot view (aux columns only for ELWAI, zero
  // projection for IPW), plan, second capture, fit.
  PilotContext ctx = *base_ctx;
  if (kind == EstimatorKind::Ipw) {
    ctx.target = PlanTarget::Ipw;
    ctx.h.resize(ctx.h.rows(), 0);
  } else if (kind == EstimatorKind::Elw) {
    ctx.h.resize(ctx.h.rows(), 0);
  }
  PilotFit pf;
  pf.design = pilot_design_at(ctx, alpha0);
  pf.context = std::move(ctx);
  pf.alpha0 = alpha0;
  const AuxStatistic* plan_aux =
      (kind == EstimatorKind::Elwai) ? aux : nullptr;
  DesignOutput plan_out =
      build_plan(pf, data, plan_aux, family, alpha10, alpha0, a_full);
  SamplingPlan plan = SamplingPlan::make(alpha10, std::move(plan_out.pi));
  RngStream second =
      RngStream::derive(rep_seed, stream_id(block, kSecondShared));
  std::vector<std::uint8_t> d2 = poisson_draw(plan.pi, second);
  CaptureSample sample = combine_captures(plan, pilot->d1, std::move(d2));
  out.n = static_cast<double>(sample.n);
  out.expected_n = sample.phi.sum();

  // The phi-moment constraint centers the TRUE mean inclusion probability.
  // Under the deployed plan that is the plan's own mean (the pilot-normalized
  // clipping makes it drift from the design target), so the EL constraints
  // use the realized alpha0 = 1 - (1-alpha10)(1 - mean(pi)).
  const double el_alpha = (mode == ElwMode::Negligible)
                              ? plan.alpha10 + plan.alpha20
                              : plan.alpha0;
  EstimateInfo info;
  FitResult fit = estimate(kind, sample, data, aux, family, el_alpha,
                           pf.context.theta, mode, &info);
  out.fallback = info.used_fallback;
  if (!fit.converged) return out;
  out.theta = std::move(fit.theta);
  out.ok = true;
  return out;
}

struct RepRecord {
  std::vector<KindOutcome> outcomes;  // aligned with config.estimators
  double n0 = 0.0;                    // sizing eval only
  double r_tilde = 0.0;
  bool sized = false;
  Eigen::VectorXd theta_ref;          // per-repetition reference fit
};

bool needs_pilot(const std::vector<EstimatorKind>& kinds) {
  for (EstimatorKind k : kinds)
    if (k != EstimatorKind::Unif) return true;
  return false;
}

}  // namespace

ModelFamily example_family(const std::string& example, int case_id) {
  if (example == "poisson") return ModelFamily::poisson();
  if (example == "logistic") return ModelFamily::logistic();
  if (example == "quantile")
    return ModelFamily::quantile((case_id == 2 || case_id == 4) ? 0.75 : 0.5);
  throw std::invalid_argument("unknown example '" + example + "'");
}

DataMatrix generate_example(const std::string& example, int case_id,
                            std::int64_t n, std::uint64_t seed,
                            ModelFamily* family_out,
                            Eigen::VectorXd* theta0_out) {
  if (case_id < 1 || case_id > 4)
    throw std::invalid_argument("case must be 1..4");
  RngStream g = RngStream::derive(seed, kDatasetStream);
  DataMatrix data;
  data.n_rows = n;
  const ModelFamily family = example_family(example, case_id);
  if (family_out != nullptr) *family_out = family;

  if (example == "poisson" || example == "logistic") {
    const int q = 7;
    data.covariates.resize(n, q);
    data.response.resize(n);
    const Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(q, -0.5);
    for (std::int64_t i = 0; i < n; ++i) {
      if (case_id == 1) {
        for (int j = 0; j < q; ++j) data.covariates(i, j) = g.next_double();
      } else {
        // X2 = X1 + eps; cases 2/4 use eps ~ U(0,1), case 3 eps ~ U(0,0.1).
        const double x1 = g.next_double();
        data.covariates(i, 0) = x1;
        for (int j = 2; j < q; ++j) {
          double v = g.next_double();
          if (case_id == 4 && (j == 5 || j == 6)) v = 2.0 * v - 1.0;
          data.covariates(i, j) = v;
        }
        double eps = g.next_double();
        if (case_id == 3) eps *= 0.1;
        data.covariates(i, 1) = x1 + eps;
      }
      const double u = data.covariates.row(i).dot(theta0);
      if (example == "poisson") {
        data.response[i] =
            static_cast<double>(g.next_poisson(clamped_exp(u)));
      } else {
        data.response[i] = (g.next_double() < expit(u)) ? 1.0 : 0.0;
      }
    }
    data.has_intercept = false;
    data.family_hint = family.name();
    if (theta0_out != nullptr) *theta0_out = theta0;
    return data;
  }

  if (example == "quantile") {
    const int q = 5;
    data.covariates.resize(n, q);
    data.response.resize(n);
    const Eigen::VectorXd beta0 = Eigen::VectorXd::Constant(q, -0.5);
    const bool half_normal = (case_id == 3 || case_id == 4);
    for (std::int64_t i = 0; i < n; ++i) {
      data.covariates(i, 0) = 1.0;
      for (int j = 1; j < q; ++j) data.covariates(i, j) = g.next_normal();
      double eps = g.next_normal();
      if (half_normal) eps = std::fabs(eps);
      data.response[i] = data.covariates.row(i).dot(beta0) + eps;
    }
    data.has_intercept = true;
    data.family_hint = family.name();
    if (theta0_out != nullptr) {
      // tau-quantile of the error shifts the intercept.
      double q_tau = 0.0;
      if (case_id == 2) q_tau = 0.6744897501960817;        // qnorm(0.75)
      else if (case_id == 3) q_tau = 0.6744897501960817;   // median of |N(0,1)|
      else if (case_id == 4) q_tau = 1.1503493803760079;   // qnorm(0.875)
      Eigen::VectorXd theta0 = beta0;
      theta0[0] += q_tau;
      *theta0_out = theta0;
    }
    return data;
  }
  throw std::invalid_argument("unknown example '" + example + "'");
}

RunResult run_pipeline(const DataMatrix& data, const AuxStatistic* aux,
                       const ModelFamily& family,
                       const Eigen::VectorXd& theta_reference,
                       const SimConfig& config) {
  RunResult result;
  result.theta_full = theta_reference;
  const double alpha10 =
      static_cast<double>(config.r0) / static_cast<double>(data.n_rows);
  const bool pilot_needed = needs_pilot(config.estimators);

  for (std::size_t ri = 0; ri < config.r_values.size(); ++ri) {
    const std::int64_t r = config.r_values[ri];
    const double alpha20 =
        static_cast<double>(r) / static_cast<double>(data.n_rows);
    std::vector<RepRecord> records(
        static_cast<std::size_t>(config.repetitions));
    const auto t0 = std::chrono::steady_clock::now();

    parallel_for(config.repetitions, config.threads, [&](int rep) {
      RepRecord& rec = records[static_cast<std::size_t>(rep)];
      rec.outcomes.resize(config.estimators.size());
      const std::uint64_t rep_seed = config.seed + static_cast<std::uint64_t>(rep);
      const std::uint64_t block = ri;

      PilotDraw pilot;
      PilotContext base_ctx;
      Eigen::MatrixXd a_full;
      bool pilot_ok = true;
      if (pilot_needed) {
        try {
          pilot = draw_pilot(
              data.n_rows, alpha10,
              RngStream::derive(rep_seed, stream_id(block, kPilotDraw)));
          base_ctx = make_pilot_context(data, aux, pilot.rows, family,
                                        config.criterion, PlanTarget::Elw);
          a_full = full_a_vectors(base_ctx, data, family);
        } catch (const std::exception&) {
          pilot_ok = false;
        }
      }
      for (std::size_t ki = 0; ki < config.estimators.size(); ++ki) {
        const EstimatorKind kind = config.estimators[ki];
        if (kind != EstimatorKind::Unif && !pilot_ok) continue;
        try {
          rec.outcomes[ki] =
              run_kind(kind, data, aux, family, config.mode, alpha10, alpha20,
                       rep_seed, block, &pilot, &base_ctx, &a_full);
        } catch (const std::exception&) {
          rec.outcomes[ki] = {};
        }
      }
    });

    const auto t1 = std::chrono::steady_clock::now();
    const double wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();

    for (std::size_t ki = 0; ki < config.estimators.size(); ++ki) {
      CellResult cell;
      cell.kind = config.estimators[ki];
      cell.r = r;
      cell.wall_ms = wall_ms;
      double sum_err = 0.0, sum_n = 0.0, sum_expected = 0.0;
      int fallbacks = 0;
      for (const RepRecord& rec : records) {
        const KindOutcome& o = rec.outcomes[ki];
        if (!o.ok) {
          ++cell.failures;
          continue;
        }
        ++cell.successes;
        sum_err += (o.theta - theta_reference).squaredNorm();
        sum_n += o.n;
        sum_expected += o.expected_n;
        if (o.fallback) ++fallbacks;
      }
      if (cell.successes > 0) {
        cell.mse = sum_err / cell.successes;
        cell.mean_n = sum_n / cell.successes;
        cell.mean_expected_n = sum_expected / cell.successes;
        cell.fallback_rate = static_cast<double>(fallbacks) / cell.successes;
      }
      result.total_failures += cell.failures;
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

RunResult run_comparison(const SimConfig& config) {
  if (!config.regenerate_data) {
    Eigen::VectorXd theta0;
    ModelFamily family;
    DataMatrix data = generate_example(config.example, config.case_id,
                                       config.n, config.seed, &family, &theta0);
    AuxStatistic aux = compute_aux(data, AuxSpec::centered_response());
    FitResult full = fit(family, data.covariates, data.response,
                         Eigen::VectorXd::Ones(data.n_rows));
    return run_pipeline(data, &aux, family, full.theta, config);
  }

  // Per-repetition regeneration: each repetition gets a fresh dataset and
  // its own full-data reference fit; cells are merged across repetitions.
  RunResult merged;
  SimConfig one = config;
  one.regenerate_data = false;
  one.repetitions = 1;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    one.seed = config.seed + static_cast<std::uint64_t>(rep);
    RunResult r = run_comparison(one);
    if (rep == 0) {
      merged = std::move(r);
    } else {
      for (std::size_t c = 0; c < merged.cells.size(); ++c) {
        CellResult& m = merged.cells[c];
        const CellResult& o = r.cells[c];
        const int total = m.successes + o.successes;
        if (total > 0) {
          m.mse = (m.mse * m.successes + o.mse * o.successes) / total;
          m.mean_n = (m.mean_n * m.successes + o.mean_n * o.successes) / total;
          m.mean_expected_n = (m.mean_expected_n * m.successes +
                               o.mean_expected_n * o.successes) / total;
          m.fallback_rate =
              (m.fallback_rate * m.successes + o.fallback_rate * o.successes) /
              total;
        }
        m.successes = total;
        m.failures += o.failures;
        m.wall_ms += o.wall_ms;
      }
      merged.total_failures += r.total_failures;
    }
  }
  return merged;
}

RunResult analyze_csv(const AnalyzeConfig& config) {
  DataMatrix raw = load_csv(config.csv_path, config.schema);
  auto [data, params] = standardize(raw, config.standardize_response);
  (void)params;
  AuxStatistic aux = compute_aux(data, config.aux);
  FitResult full = fit(config.family, data.covariates, data.response,
                       Eigen::VectorXd::Ones(data.n_rows));
  SimConfig sim = config.sim;
  sim.n = data.n_rows;
  if (sim.r_values.empty()) {
    RunResult out;
    out.theta_full = full.theta;
    return out;
  }
  return run_pipeline(data, config.use_aux ? &aux : nullptr, config.family,
                      full.theta, sim);
}

std::vector<SizingEvalCell> run_sizing_eval(const SizingEvalConfig& config) {
  const SimConfig& base = config.base;
  Eigen::VectorXd theta0;
  ModelFamily family;
  DataMatrix data = generate_example(base.example, base.case_id, base.n,
                                     base.seed, &family, &theta0);
  AuxStatistic aux = compute_aux(data, AuxSpec::centered_response());
  FitResult full = fit(family, data.covariates, data.response,
                       Eigen::VectorXd::Ones(data.n_rows));
  const double n_total = static_cast<double>(data.n_rows);
  const double alpha10 = static_cast<double>(base.r0) / n_total;
  const double r0 = static_cast<double>(base.r0);

  // Sizing always works on the plain-ELW pilot (no auxiliary columns).
  auto make_sizing_ctx = [&](const DataMatrix& d,
                             const std::vector<std::int64_t>& rows) {
    SizingContext ctx;
    ctx.pilot = make_pilot_context(d, nullptr, rows, family, base.criterion,
                                   PlanTarget::Elw);
    ctx.n_total = d.n_rows;
    ctx.alpha10 = alpha10;
    return ctx;
  };

  // Requirement grid: explicit values, or derived from a calibration pilot
  // so the implied second-capture sizes span [target_r_low, target_r_high].
  std::vector<double> grid = config.grid;
  if (grid.empty()) {
    PilotDraw calib = draw_pilot(
        data.n_rows, alpha10,
        RngStream::derive(base.seed, kCalibrationStream));
    SizingContext ctx = make_sizing_ctx(data, calib.rows);
    for (int cell = 0; cell < config.cells; ++cell) {
      const double f = config.cells == 1
                           ? 0.0
                           : static_cast<double>(cell) /
                                 static_cast<double>(config.cells - 1);
      const double r_target = config.target_r_low *
                              std::pow(config.target_r_high / config.target_r_low, f);
      const double n0 = r0 + r_target * (n_total - r0) / n_total;
      const double alpha0 = n0 / n_total;
      if (config.kind == PrecisionSpec::Kind::R1) {
        const double s = pilot_design_at(ctx.pilot, alpha0).norm_mean;
        grid.push_back(s * s / n0);
      } else {
        grid.push_back(m2_radius_for_size(ctx, n0, config.confidence_a));
      }
    }
  }

  std::vector<SizingEvalCell> cells;
  for (std::size_t cell_idx = 0; cell_idx < grid.size(); ++cell_idx) {
    const double requirement = grid[cell_idx];
    std::vector<RepRecord> records(static_cast<std::size_t>(base.repetitions));
    parallel_for(base.repetitions, base.threads, [&](int rep) {
      RepRecord& rec = records[static_cast<std::size_t>(rep)];
      rec.outcomes.resize(base.estimators.size());
      const std::uint64_t rep_seed = base.seed + static_cast<std::uint64_t>(rep);
      const std::uint64_t block = cell_idx;
      try {
        // Per-repetition regeneration draws a fresh dataset (and reference
        // fit), making the reported coverage unconditional over datasets.
        const DataMatrix* rep_data = &data;
        const AuxStatistic* rep_aux = &aux;
        const Eigen::VectorXd* rep_ref = &full.theta;
        DataMatrix own_data;
        AuxStatistic own_aux;
        Eigen::VectorXd own_ref;
        if (base.regenerate_data) {
          own_data = generate_example(base.example, base.case_id, base.n,
                                      rep_seed, nullptr, nullptr);
          own_aux = compute_aux(own_data, AuxSpec::centered_response());
          own_ref = fit(family, own_data.covariates, own_data.response,
                        Eigen::VectorXd::Ones(own_data.n_rows))
                        .theta;
          rep_data = &own_data;
          rep_aux = &own_aux;
          rep_ref = &own_ref;
        }
        rec.theta_ref = *rep_ref;
        PilotDraw pilot = draw_pilot(
            rep_data->n_rows, alpha10,
            RngStream::derive(rep_seed, stream_id(block, kPilotDraw)));
        // One pilot fit serves both sizing (no auxiliary columns) and the
        // estimation pipeline (ELWAI re-attaches them).
        PilotContext base_ctx =
            make_pilot_context(*rep_data, rep_aux, pilot.rows, family,
                               base.criterion, PlanTarget::Elw);
        SizingContext sctx;
        sctx.pilot = base_ctx;
        sctx.pilot.h.resize(sctx.pilot.h.rows(), 0);
        sctx.n_total = rep_data->n_rows;
        sctx.alpha10 = alpha10;
        const SizeResult size =
            config.kind == PrecisionSpec::Kind::R1
                ? size_m1(sctx, requirement)
                : size_m2(sctx, requirement, config.confidence_a);
        rec.n0 = size.n0;
        rec.r_tilde = size.r_second;
        rec.sized = true;
        const double alpha20 = size.r_second / n_total;
        Eigen::MatrixXd a_full = full_a_vectors(base_ctx, *rep_data, family);
        for (std::size_t ki = 0; ki < base.estimators.size(); ++ki) {
          try {
            rec.outcomes[ki] = run_kind(base.estimators[ki], *rep_data,
                                        rep_aux, family, base.mode, alpha10,
                                        alpha20, rep_seed, block, &pilot,
                                        &base_ctx, &a_full);
          } catch (const std::exception&) {
            rec.outcomes[ki] = {};
          }
        }
      } catch (const std::exception&) {
        // sizing or pilot failure: all outcomes stay failed
      }
    });

    for (std::size_t ki = 0; ki < base.estimators.size(); ++ki) {
      SizingEvalCell out;
      out.cell = static_cast<int>(cell_idx);
      out.requirement = requirement;
      out.kind = base.estimators[ki];
      double sum_err = 0.0, sum_cov = 0.0, sum_n0 = 0.0, sum_r = 0.0;
      int successes = 0, sized = 0;
      for (const RepRecord& rec : records) {
        if (rec.sized) {
          ++sized;
          sum_n0 += rec.n0;
          sum_r += rec.r_tilde;
        }
        if (rec.outcomes.empty() || !rec.outcomes[ki].ok) {
          ++out.failures;
          continue;
        }
        ++successes;
        const double err_sq =
            (rec.outcomes[ki].theta - rec.theta_ref).squaredNorm();
        sum_err += err_sq;
        const double dist_to_true =
            (rec.outcomes[ki].theta - theta0).norm();
        if (config.kind == PrecisionSpec::Kind::R2 &&
            dist_to_true <= requirement)
          sum_cov += 1.0;
      }
      if (successes > 0) {
        out.mse = sum_err / successes;
        out.ratio = config.kind == PrecisionSpec::Kind::R1
                        ? out.mse / requirement
                        : 0.0;
        out.coverage = config.kind == PrecisionSpec::Kind::R2
                           ? sum_cov / successes
                           : 0.0;
      }
      if (sized > 0) {
        out.mean_n0 = sum_n0 / sized;
        out.mean_r = sum_r / sized;
      }
      cells.push_back(out);
    }
  }
  return cells;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_results_csv(const std::string& path, const RunResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "estimator,r,metric,value\n";
  for (const CellResult& cell : result.cells) {
    const std::string prefix =
        estimator_name(cell.kind) + "," + std::to_string(cell.r) + ",";
    out << prefix << "mse," << format_double(cell.mse) << "\n";
    out << prefix << "mean_n," << format_double(cell.mean_n) << "\n";
    out << prefix << "mean_expected_n," << format_double(cell.mean_expected_n)
        << "\n";
    out << prefix << "fallback_rate," << format_double(cell.fallback_rate)
        << "\n";
    out << prefix << "failures," << cell.failures << "\n";
    out << prefix << "successes," << cell.successes << "\n";
  }
}

void write_sizing_csv(const std::string& path,
                      const std::vector<SizingEvalCell>& cells,
                      PrecisionSpec::Kind kind) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "cell,requirement,estimator,metric,value\n";
  const char* metric =
      kind == PrecisionSpec::Kind::R1 ? "mse_ratio" : "coverage";
  for (const SizingEvalCell& c : cells) {
    const std::string prefix = std::to_string(c.cell) + "," +
                               format_double(c.requirement) + "," +
                               estimator_name(c.kind) + ",";
    out << prefix << metric << ","
        << format_double(kind == PrecisionSpec::Kind::R1 ? c.ratio
                                                         : c.coverage)
        << "\n";
    out << prefix << "mse," << format_double(c.mse) << "\n";
    out << prefix << "mean_n0," << format_double(c.mean_n0) << "\n";
    out << prefix << "mean_r," << format_double(c.mean_r) << "\n";
    out << prefix << "failures," << c.failures << "\n";
  }
}

void write_manifest(const std::string& path, const SimConfig& config,
                    const RunResult& result, const std::string& command,
                    double wall_ms) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = "0.1.0";
  j["example"] = config.example;
  j["case"] = config.case_id;
  j["n"] = config.n;
  j["r0"] = config.r0;
  j["r_values"] = config.r_values;
  j["repetitions"] = config.repetitions;
  j["criterion"] = config.criterion == Criterion::A ? "A" : "L";
  std::vector<std::string> est;
  for (EstimatorKind k : config.estimators) est.push_back(estimator_name(k));
  j["estimators"] = est;
  j["seed"] = config.seed;
  j["mode"] = config.mode == ElwMode::Standard ? "standard" : "negligible";
  j["regenerate_data"] = config.regenerate_data;
  j["kernel_variant"] = kernels::active().name;
  j["total_failures"] = result.total_failures;
  std::vector<double> theta(result.theta_full.data(),
                            result.theta_full.data() + result.theta_full.size());
  j["theta_full"] = theta;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const CellResult& c : result.cells) {
    nlohmann::ordered_json jc;
    jc["estimator"] = estimator_name(c.kind);
    jc["r"] = c.r;
    jc["wall_ms"] = c.wall_ms;
    jc["failures"] = c.failures;
    cells.push_back(jc);
  }
  j["cells"] = cells;
  j["wall_ms_total"] = wall_ms;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace subsamp
