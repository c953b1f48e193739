#include "alm/analytics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "alm/errors.hpp"

namespace alm {

double empirical_quantile(std::span<const double> samples, double p) {
  if (samples.empty()) throw NumericalError("quantile of an empty sample set");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("quantile level must lie in (0, 1)");
  const auto n = static_cast<double>(samples.size());
  // The tolerance keeps p n = 500 from becoming 501 through rounding of p.
  auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  std::vector<double> work(samples.begin(), samples.end());
  std::nth_element(work.begin(), work.begin() + static_cast<long>(rank - 1), work.end());
  return work[rank - 1];
}

std::vector<double> normalize(std::span<const double> samples, double reference) {
  if (!(reference > 0.0)) throw ConfigError("normalization reference must be > 0");
  std::vector<double> out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(),
                 [reference](double v) { return v / reference; });
  return out;
}

double normalization_constant(std::span<const double> samples) {
  if (samples.empty()) throw NumericalError("normalization of an empty sample set");
  const double worst = *std::min_element(samples.begin(), samples.end());
  if (!(worst < 0.0)) throw NumericalError("reference run has no loss to normalize by");
  return -worst;
}

QuantileReport quantile_report(std::span<const double> samples, std::span<const double> levels,
                               std::optional<double> normalization) {
  if (samples.empty()) throw NumericalError("quantile report of an empty sample set");
  QuantileReport report;
  report.levels.assign(levels.begin(), levels.end());
  std::sort(report.levels.begin(), report.levels.end());
  report.n = samples.size();
  report.normalization = normalization;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  for (double p : report.levels) report.raw.push_back(empirical_quantile(sorted, p));
  if (normalization) report.normalized = normalize(report.raw, *normalization);
  return report;
}

std::vector<HistogramBin> histogram(std::span<const double> samples, std::size_t bins) {
  if (samples.empty()) throw NumericalError("histogram of an empty sample set");
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  double hi = *hi_it;
  if (!(hi > lo)) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].left = lo + width * static_cast<double>(b);
    out[b].right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double v : samples) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    ++out[std::min(b, bins - 1)].count;
  }
  return out;
}

FitResult fit_policy(std::span<const Snapshot> snapshots, FitForm form) {
  const bool timed = form == FitForm::kLinearQuadratic;
  if (snapshots.size() < 10) throw NumericalError("fitting error: needs at least 10 snapshots");
  std::set<double> xs;
  std::set<double> ts;
  for (const Snapshot& s : snapshots) {
    xs.insert(s.funding_ratio);
    ts.insert(s.t);
  }
  if (xs.size() < 3) throw NumericalError("fitting error: needs at least 3 distinct funding ratios");
  if (timed && ts.size() < 2) throw NumericalError("fitting error: needs at least 2 distinct dates");

  static const char* const kNames[] = {"1", "t", "x", "t*x", "x^2", "t*x^2"};
  const std::vector<int> columns = timed ? std::vector<int>{0, 1, 2, 3, 4, 5}
                                         : std::vector<int>{0, 2, 4};
  const auto rows = static_cast<Eigen::Index>(snapshots.size());
  const auto cols = static_cast<Eigen::Index>(columns.size());
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd target(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Snapshot& s = snapshots[static_cast<std::size_t>(i)];
    const double x = s.funding_ratio;
    const double basis[] = {1.0, s.t, x, s.t * x, x * x, s.t * x * x};
    for (Eigen::Index j = 0; j < cols; ++j) design(i, j) = basis[columns[static_cast<std::size_t>(j)]];
    target(i) = s.phi;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < cols) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < cols; ++j) {
      if (!names.empty()) names += ", ";
      names += kNames[columns[static_cast<std::size_t>(perm(j))]];
    }
    throw NumericalError("fitting error: rank-deficient design, dependent directions: " + names);
  }
  const Eigen::VectorXd beta = qr.solve(target);
  const Eigen::VectorXd residual = design * beta - target;

  FitResult fit;
  fit.n = snapshots.size();
  fit.residual_rms = std::sqrt(residual.squaredNorm() / static_cast<double>(rows));
  if (timed) {
    fit.strategy = LinearQuadratic{beta(0), beta(1), beta(2), beta(3), beta(4), beta(5)};
  } else {
    fit.strategy = Quadratic{beta(0), beta(1), beta(2)};
  }
  return fit;
}

double reference_normalization(const PipelineConfig& config, const EconomicParams& econ) {
  SimulationOptions options = config.simulation;
  options.record_snapshots = false;
  const PTSampleSet reference = simulate(config.reference_model, config.schedule, econ,
                                         ConstantMix{config.reference_weight}, options);
  return normalization_constant(reference.samples);
}

PipelineResult run_pipeline(const PipelineConfig& config, double a_l_evaluate,
                            std::optional<double> normalization) {
  PipelineResult out;
  out.a_l_optimize = config.econ.a_l;
  out.a_l_evaluate = a_l_evaluate;
  out.solve = solve(config.model, config.schedule, config.econ, config.grid, config.objective,
                    config.solver);

  SimulationOptions with_snapshots = config.simulation;
  with_snapshots.record_snapshots = true;
  out.optimal = simulate(config.model, config.schedule, config.econ, Tabulated{out.solve.policy},
                         with_snapshots);
  out.fit = fit_policy(out.optimal.snapshots, FitForm::kQuadratic);

  EconomicParams evaluate_econ = config.econ;
  evaluate_econ.a_l = a_l_evaluate;
  SimulationOptions plain = config.simulation;
  plain.record_snapshots = false;
  out.heuristic = simulate(config.model, config.schedule, evaluate_econ, out.fit.strategy, plain);
  out.heuristic.normalization = normalization;
  out.report = quantile_report(out.heuristic.samples, config.levels, normalization);
  return out;
}

SweepResult robustness_sweep(std::span<const double> a_l_optimize, double a_l_evaluate,
                             const PipelineConfig& config) {
  if (!(a_l_evaluate > 0.0)) throw ConfigError("evaluation a_L must be > 0");
  for (double rate : a_l_optimize) {
    if (!(rate > 0.0)) throw ConfigError("optimization a_L values must be > 0");
  }
  EconomicParams evaluate_econ = config.econ;
  evaluate_econ.a_l = a_l_evaluate;

  SweepResult sweep;
  sweep.normalization = reference_normalization(config, evaluate_econ);
  for (double rate : a_l_optimize) {
    PipelineConfig run = config;
    run.econ.a_l = rate;
    sweep.runs.push_back(run_pipeline(run, a_l_evaluate, sweep.normalization));
  }
  return sweep;
}

}  // namespace alm
