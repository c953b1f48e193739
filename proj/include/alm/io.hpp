#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "alm/analytics.hpp"
#include "alm/dp_solver.hpp"
#include "alm/liability.hpp"
#include "alm/market_models.hpp"
#include "alm/policy.hpp"
#include "alm/simulator.hpp"

namespace alm::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text, const std::string& context);

/// Flat `key = value` text, one entry per line, '#' starts a comment.
/// Keys keep insertion order when written.
class KeyValue {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;

  std::string str() const;
  static KeyValue parse(const std::string& text, const std::string& source);
  static KeyValue read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Rows of a CSV file with a header line; numeric cells only.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Schedule override: `date_years,amount_meur` and `date_years`.
std::vector<Payment> read_payments_csv(const std::filesystem::path& path);
std::vector<double> read_constraint_dates_csv(const std::filesystem::path& path);

// Calibration input: `date_years,index_level`.
std::vector<PricePoint> read_prices_csv(const std::filesystem::path& path);

// Strategy files: `kind = ...` plus the coefficients of that kind.
std::string strategy_text(const Strategy& strategy, const std::string& solve_dir = "");
void write_strategy(const std::filesystem::path& path, const Strategy& strategy,
                    const std::string& solve_dir = "");
Strategy read_strategy(const std::filesystem::path& path);

// Solve results: meta.txt + layer_NNN.csv with `A,D[,S],value,phi`.
inline constexpr int kSolveFormatVersion = 1;
void write_solve_result(const std::filesystem::path& dir, const SolveResult& result);
SolveResult read_solve_result(const std::filesystem::path& dir);

// Simulation outputs.
std::string samples_csv(const PTSampleSet& set);
std::string snapshots_csv(const PTSampleSet& set);
std::string quantiles_csv(const QuantileReport& report);
std::string histogram_csv(const std::vector<HistogramBin>& bins);
std::vector<double> read_samples_csv(const std::filesystem::path& path);
std::vector<Snapshot> read_snapshots_csv(const std::filesystem::path& path);

}  // namespace alm::io
