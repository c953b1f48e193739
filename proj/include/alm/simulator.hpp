#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alm/liability.hpp"
#include "alm/market_models.hpp"
#include "alm/policy.hpp"
#include "alm/portfolio.hpp"

namespace alm {

struct SimulationOptions {
  std::size_t n_paths = 50000;
  std::uint64_t seed = 1;
  int steps_per_year = 2;
  bool record_snapshots = false;
  std::size_t snapshot_cap = 1000000;
  int workers = 0;
};

/// Funding ratio and prescribed control at one decision date of one path.
struct Snapshot {
  std::uint32_t path = 0;
  double t = 0.0;
  double funding_ratio = 0.0;
  double phi = 0.0;
};

struct PTSampleSet {
  std::vector<double> samples;      // P_T = A_T − D_T − L_T, per path
  std::vector<double> endowments;   // D_T, per path
  std::vector<std::uint32_t> injections;
  std::vector<Snapshot> snapshots;  // ordered by (path, t)

  ModelKind model = ModelKind::kBlackScholes;
  std::string strategy;
  std::uint64_t seed = 0;
  std::optional<double> normalization;

  std::size_t size() const { return samples.size(); }
};

/// Forward Monte Carlo of (S, A, D) under a strategy. Paths run in
/// parallel on independent counter-based streams keyed by path index.
PTSampleSet simulate(const MarketModel& model, const CashflowSchedule& schedule,
                     const EconomicParams& econ, const Strategy& strategy,
                     const SimulationOptions& options);

/// Single-threaded reference kept for testing.
PTSampleSet simulate_serial(const MarketModel& model, const CashflowSchedule& schedule,
                            const EconomicParams& econ, const Strategy& strategy,
                            const SimulationOptions& options);

}  // namespace alm
