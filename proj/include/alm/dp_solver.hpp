#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "alm/grid.hpp"
#include "alm/liability.hpp"
#include "alm/market_models.hpp"
#include "alm/policy.hpp"

namespace alm {

/// Penalty g(x) = (x + c2 x² + c3 x³) 1_{x>0} applied to x = loss / scale.
struct ObjectiveG {
  double c2 = 0.4;
  double c3 = 4e-5;
  double scale = 1000.0;

  static ObjectiveG g1() { return {0.4, 0.0, 1000.0}; }
  static ObjectiveG g2() { return {0.4, 4e-4, 1000.0}; }
  static ObjectiveG g3() { return {0.4, 4e-5, 1000.0}; }

  /// Checks g is convex and nondecreasing for losses up to max_loss (M€).
  void validate(double max_loss) const;
};

/// Penalty for a loss x in money units (M€).
double g_eval(double x, const ObjectiveG& objective);

struct GridSpec {
  double a_min = 0.0;
  std::optional<double> a_max;  // default 3 L_0
  double a_step = 200.0;
  std::optional<double> d_max;  // default 1.5 L_0
  double d_step = 500.0;
  std::size_t s_meshes = 100;
  std::size_t s_samples = 600000;
};

/// Controls 0, 1/(n−1), ..., 1.
std::vector<double> uniform_controls(std::size_t count);

struct SolverOptions {
  std::vector<double> controls = uniform_controls(21);
  std::size_t n_inner = 4000;
  std::uint64_t seed = 1;
  int steps_per_year = 2;
  int workers = 0;  // 0 selects the OpenMP default
};

/// Equiprobable partition of simulated index levels at one date.
struct IndexMesh {
  std::vector<double> cuts;        // n_meshes − 1 boundaries
  std::vector<double> levels;      // per-mesh medians
  std::vector<std::size_t> occupancy;
};

IndexMesh build_s_mesh(const MmmParams& model, double t, std::size_t n_samples,
                       std::size_t n_meshes, std::uint64_t seed, std::uint64_t stream = 0);

struct SolveResult {
  MarketModel model;
  EconomicParams econ;
  GridSpec grid_spec;
  ObjectiveG objective;
  SolverOptions options;
  double initial_assets = 0.0;  // A_0 = L_0

  std::vector<double> times;               // layer dates t_0 .. t_N
  std::vector<StateGrid> grids;            // per layer
  std::vector<std::vector<double>> values; // per layer, StateGrid::flat layout
  std::shared_ptr<const PolicyGrid> policy;  // layers 0 .. N−1

  std::vector<double> clamp_rate;  // per decision layer
  std::vector<std::string> warnings;

  ModelKind kind() const { return kind_of(model); }
  /// Ĵ at (A_0, D = 0, S_0), interpolated on layer 0.
  double initial_value() const;
};

/// Backward induction for min_φ E[g(−P_T)]. Grid nodes within a layer are
/// evaluated in parallel; results do not depend on the worker count.
SolveResult solve(const MarketModel& model, const CashflowSchedule& schedule,
                  const EconomicParams& econ, const GridSpec& grid, const ObjectiveG& objective,
                  const SolverOptions& options);

/// Single-threaded reference with the same random streams, kept for testing.
SolveResult solve_serial(const MarketModel& model, const CashflowSchedule& schedule,
                         const EconomicParams& econ, const GridSpec& grid,
                         const ObjectiveG& objective, const SolverOptions& options);

/// Draws used at one grid node: n_inner blocks of draws_per_step(kind) normals.
std::vector<double> node_draws(std::uint64_t seed, std::size_t layer, std::size_t node,
                               std::size_t n_inner, ModelKind kind);

}  // namespace alm
