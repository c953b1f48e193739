#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alm/analytics.hpp"
#include "alm/dp_solver.hpp"
#include "alm/liability.hpp"
#include "alm/market_models.hpp"
#include "alm/simulator.hpp"

namespace alm {

inline constexpr int kConfigSchemaVersion = 1;

/// How report quantiles are normalized.
struct NormalizationSetting {
  enum class Mode { kNone, kReference, kValue } mode = Mode::kReference;
  double value = 0.0;
};

/// Fully resolved run configuration. Built from the defaults, then the
/// config file, then command-line overrides, in that order.
struct RunConfig {
  std::uint64_t seed = 1;
  EconomicParams econ;
  CashflowSchedule schedule;
  MarketModel model;
  GbmParams reference_model;  // Constant-Mix normalization runs
  ObjectiveG objective;
  GridSpec grid;
  SolverOptions solver;
  SimulationOptions simulation;
  std::vector<double> levels;
  std::size_t bins = 80;
  NormalizationSetting normalization;
  std::vector<double> sweep_a_l;
  double sweep_evaluate = 0.026;
  std::filesystem::path output;

  /// Canonical JSON of every key, workers excluded. Reloading it yields the
  /// same configuration.
  std::string resolved;

  /// Applies a worker count to the solver and the simulator.
  void set_workers(int workers);
  PipelineConfig pipeline() const;
};

/// Dotted-key override, e.g. `model.kind=mmm`; the value is read as JSON
/// when it parses, as a plain string otherwise.
struct Override {
  std::string key;
  std::string value;
};
Override parse_override(const std::string& text);

/// Throws ConfigError naming the offending key on any schema violation.
RunConfig load_config(const std::optional<std::filesystem::path>& file,
                      const std::vector<Override>& overrides);
RunConfig config_from_text(const std::string& json_text, const std::filesystem::path& base_dir,
                           const std::vector<Override>& overrides);

/// The built-in defaults as JSON text.
std::string default_config_text();

}  // namespace alm
