#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alm/dp_solver.hpp"
#include "alm/simulator.hpp"

namespace alm {

/// Lower empirical quantile: the ⌈p n⌉-th order statistic.
double empirical_quantile(std::span<const double> samples, double p);

/// Divides every sample by the (positive) reference.
std::vector<double> normalize(std::span<const double> samples, double reference);

/// |min| of a sample set, the constant that maps its worst loss to −1.
double normalization_constant(std::span<const double> samples);

inline const std::vector<double>& default_quantile_levels() {
  static const std::vector<double> levels{0.01, 0.02, 0.03, 0.05, 0.10, 0.20, 0.30};
  return levels;
}

struct QuantileReport {
  std::vector<double> levels;
  std::vector<double> raw;
  std::vector<double> normalized;  // empty without a normalization constant
  std::size_t n = 0;
  std::optional<double> normalization;
};

QuantileReport quantile_report(std::span<const double> samples, std::span<const double> levels,
                               std::optional<double> normalization);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [min, max] of the samples; the last bin is closed.
std::vector<HistogramBin> histogram(std::span<const double> samples, std::size_t bins = 80);

enum class FitForm { kQuadratic, kLinearQuadratic };

struct FitResult {
  Strategy strategy;
  double residual_rms = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares of φ on {1, x, x²} or {1, t, x, t x, x², t x²}.
FitResult fit_policy(std::span<const Snapshot> snapshots, FitForm form);

/// Everything one optimize → fit → evaluate run needs.
struct PipelineConfig {
  MarketModel model;
  GbmParams reference_model;  // Constant-Mix normalization run
  CashflowSchedule schedule;
  EconomicParams econ;
  GridSpec grid;
  ObjectiveG objective;
  SolverOptions solver;
  SimulationOptions simulation;
  double reference_weight = 0.5;
  std::vector<double> levels = default_quantile_levels();
};

/// |min| of P_T for Constant Mix under the Black-Scholes reference model.
double reference_normalization(const PipelineConfig& config, const EconomicParams& econ);

struct PipelineResult {
  double a_l_optimize = 0.0;
  double a_l_evaluate = 0.0;
  SolveResult solve;
  PTSampleSet optimal;    // solved policy, optimize-rate world, with snapshots
  FitResult fit;          // quadratic heuristic
  PTSampleSet heuristic;  // heuristic, evaluate-rate world
  QuantileReport report;  // of `heuristic`
};

/// Solves at config.econ, simulates the solved policy, fits the quadratic
/// heuristic and evaluates it with a_L replaced by a_l_evaluate.
PipelineResult run_pipeline(const PipelineConfig& config, double a_l_evaluate,
                            std::optional<double> normalization);

struct SweepResult {
  double normalization = 0.0;
  std::vector<PipelineResult> runs;
};

/// One pipeline per optimize-rate, all evaluated at a_l_evaluate and
/// normalized by the Constant-Mix reference run at the evaluate-rate.
SweepResult robustness_sweep(std::span<const double> a_l_optimize, double a_l_evaluate,
                             const PipelineConfig& config);

}  // namespace alm
