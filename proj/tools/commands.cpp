#include "commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>

#include "alm/analytics.hpp"
#include "alm/config.hpp"
#include "alm/dp_solver.hpp"
#include "alm/errors.hpp"
#include "alm/io.hpp"
#include "alm/simulator.hpp"

namespace alm::cli {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string out;
  std::string model;
  std::string objective;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON run configuration");
  cmd->add_option("--set", flags.sets, "override a config key, e.g. --set grid.a_step=100");
  cmd->add_option("--seed", flags.seed, "master seed (config key: seed)");
  cmd->add_option("--workers", flags.workers, "worker threads, 0 = all cores")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", flags.out, "output directory (config key: output)");
  cmd->add_option("--model", flags.model, "shortcut for --set model.kind=...")
      ->check(CLI::IsMember({"bs", "mmm"}));
  cmd->add_option("--objective", flags.objective, "shortcut for --set objective.preset=...")
      ->check(CLI::IsMember({"g1", "g2", "g3", "custom"}));
}

RunConfig resolve(const CommonFlags& flags) {
  std::vector<Override> overrides;
  for (const std::string& s : flags.sets) overrides.push_back(parse_override(s));
  if (!flags.model.empty()) overrides.push_back({"model.kind", "\"" + flags.model + "\""});
  if (!flags.objective.empty()) {
    overrides.push_back({"objective.preset", "\"" + flags.objective + "\""});
  }
  if (flags.seed) overrides.push_back({"seed", std::to_string(*flags.seed)});
  if (!flags.out.empty()) overrides.push_back({"output", "\"" + flags.out + "\""});
  std::optional<fs::path> file;
  if (!flags.config.empty()) file = fs::path(flags.config);
  RunConfig config = load_config(file, overrides);
  config.set_workers(flags.workers);
  return config;
}

void write_resolved(const fs::path& dir, const RunConfig& config) {
  io::write_text(dir / "resolved_config.json", config.resolved);
}

std::optional<double> normalization_for(const RunConfig& config, const EconomicParams& econ) {
  switch (config.normalization.mode) {
    case NormalizationSetting::Mode::kNone:
      return std::nullopt;
    case NormalizationSetting::Mode::kValue:
      return config.normalization.value;
    case NormalizationSetting::Mode::kReference:
      break;
  }
  return reference_normalization(config.pipeline(), econ);
}

std::string summary_text(const std::string& command, const PTSampleSet& set,
                         const RunConfig& config, const QuantileReport& report) {
  const double n = static_cast<double>(set.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  double g_sum = 0.0;
  double g_sq = 0.0;
  double d_sum = 0.0;
  double inj_sum = 0.0;
  std::size_t losses = 0;
  double lo = set.samples.front();
  double hi = set.samples.front();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double p = set.samples[i];
    const double g = g_eval(-p, config.objective);
    sum += p;
    sum_sq += p * p;
    g_sum += g;
    g_sq += g * g;
    d_sum += set.endowments[i];
    inj_sum += set.injections[i];
    if (p < 0.0) ++losses;
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  const double mean = sum / n;
  const double g_mean = g_sum / n;
  const double g_var = n > 1 ? std::max(0.0, (g_sq - n * g_mean * g_mean) / (n - 1)) : 0.0;

  io::KeyValue kv;
  kv.set("command", command);
  kv.set("model", set.model == ModelKind::kMmm ? "mmm" : "bs");
  kv.set("strategy", set.strategy);
  kv.set("seed", std::to_string(set.seed));
  kv.set("n_paths", std::to_string(set.size()));
  kv.set("normalization", report.normalization ? io::format_double(*report.normalization) : "none");
  kv.set("mean_p_t", mean);
  kv.set("std_p_t", n > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1))) : 0.0);
  kv.set("min_p_t", lo);
  kv.set("max_p_t", hi);
  kv.set("loss_probability", static_cast<double>(losses) / n);
  kv.set("objective", g_mean);
  kv.set("objective_stderr", std::sqrt(g_var / n));
  kv.set("mean_d_t", d_sum / n);
  kv.set("mean_injections", inj_sum / n);
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const std::string level = io::format_double(report.levels[i]);
    kv.set("quantile." + level, report.raw[i]);
    if (report.normalization) kv.set("normalized." + level, report.normalized[i]);
  }
  return kv.str();
}

/// Quantiles, histogram and summary of one P_T sample set.
void write_report(const fs::path& dir, const std::string& command, const PTSampleSet& set,
                  const RunConfig& config, std::optional<double> normalization) {
  const QuantileReport report = quantile_report(set.samples, config.levels, normalization);
  io::write_text(dir / "quantiles.csv", io::quantiles_csv(report));
  const std::vector<double> scaled =
      normalization ? normalize(set.samples, *normalization) : set.samples;
  io::write_text(dir / "histogram.csv", io::histogram_csv(histogram(scaled, config.bins)));
  io::write_text(dir / "summary.txt", summary_text(command, set, config, report));
}

void write_simulation(const fs::path& dir, const PTSampleSet& set, const RunConfig& config,
                      std::optional<double> normalization) {
  io::write_text(dir / "pt_samples.csv", io::samples_csv(set));
  if (!set.snapshots.empty()) io::write_text(dir / "snapshots.csv", io::snapshots_csv(set));
  write_report(dir, "simulate", set, config, normalization);
}

struct StrategySource {
  Strategy strategy;
  std::string solve_dir;  // set for tabulated strategies
};

StrategySource load_strategy(const std::string& spec) {
  const std::string prefix = "constant-mix";
  if (spec.rfind(prefix, 0) == 0 && !fs::exists(spec)) {
    if (spec == prefix) return {ConstantMix{}, ""};
    if (spec.size() > prefix.size() + 1 && spec[prefix.size()] == ':') {
      const double w = io::parse_double(spec.substr(prefix.size() + 1), "--strategy weight");
      return {ConstantMix{w}, ""};
    }
    throw ConfigError("--strategy must be constant-mix[:weight], a strategy file or a solve dir");
  }
  const fs::path path(spec);
  if (!fs::exists(path)) throw IoError("strategy source not found: " + spec);
  if (fs::is_directory(path)) {
    return {Tabulated{io::read_solve_result(path).policy}, fs::absolute(path).lexically_normal()};
  }
  return {io::read_strategy(path), ""};
}

std::string rate_dir(double rate) { return "a_l_" + io::format_double(rate); }

int cmd_solve(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig config = resolve(flags);
  const SolveResult result = solve(config.model, config.schedule, config.econ, config.grid,
                                   config.objective, config.solver);
  io::write_solve_result(config.output, result);
  write_resolved(config.output, config);
  for (const std::string& w : result.warnings) err << "warning: " << w << '\n';
  out << "solve: " << result.times.size() - 1 << " steps, value at t = 0: "
      << io::format_double(result.initial_value()) << ", written to " << config.output.string()
      << '\n';
  return kOk;
}

int cmd_simulate(const CommonFlags& flags, const std::string& strategy_spec, bool snapshots,
                 std::ostream& out) {
  RunConfig config = resolve(flags);
  const StrategySource source = load_strategy(strategy_spec);
  config.simulation.record_snapshots = snapshots;
  PTSampleSet set =
      simulate(config.model, config.schedule, config.econ, source.strategy, config.simulation);
  const std::optional<double> norm = normalization_for(config, config.econ);
  set.normalization = norm;
  write_simulation(config.output, set, config, norm);
  io::write_strategy(config.output / "strategy.txt", source.strategy, source.solve_dir);
  write_resolved(config.output, config);
  out << "simulate: " << set.size() << " paths of " << set.strategy << ", written to "
      << config.output.string() << '\n';
  return kOk;
}

int cmd_fit(const CommonFlags& flags, const std::string& snapshots, const std::string& form,
            std::ostream& out) {
  const RunConfig config = resolve(flags);
  const std::vector<Snapshot> data = io::read_snapshots_csv(snapshots);
  const FitResult fit =
      fit_policy(data, form == "quadratic" ? FitForm::kQuadratic : FitForm::kLinearQuadratic);
  io::write_strategy(config.output / "strategy.txt", fit.strategy);
  io::KeyValue kv;
  kv.set("command", "fit");
  kv.set("form", form);
  kv.set("n", std::to_string(fit.n));
  kv.set("residual_rms", fit.residual_rms);
  io::write_text(config.output / "summary.txt", kv.str());
  write_resolved(config.output, config);
  out << "fit: " << form << " from " << fit.n << " snapshots, residual rms "
      << io::format_double(fit.residual_rms) << '\n';
  return kOk;
}

int cmd_report(const CommonFlags& flags, const std::string& samples_path,
               const std::string& reference_path, std::ostream& out) {
  const RunConfig config = resolve(flags);
  PTSampleSet set;
  set.samples = io::read_samples_csv(samples_path);
  const io::CsvTable table = io::read_csv(samples_path);
  const std::size_t d_col = table.column("d_t");
  const std::size_t n_col = table.column("n_injections");
  for (const auto& row : table.rows) {
    set.endowments.push_back(io::parse_double(row[d_col], samples_path));
    set.injections.push_back(
        static_cast<std::uint32_t>(io::parse_double(row[n_col], samples_path)));
  }
  set.model = kind_of(config.model);
  set.strategy = "samples:" + fs::path(samples_path).filename().string();
  set.seed = config.seed;

  std::optional<double> norm;
  if (!reference_path.empty()) {
    norm = normalization_constant(io::read_samples_csv(reference_path));
  } else {
    norm = normalization_for(config, config.econ);
  }
  write_report(config.output, "report", set, config, norm);
  write_resolved(config.output, config);
  out << "report: " << set.size() << " samples, written to " << config.output.string() << '\n';
  return kOk;
}

int cmd_sweep(const CommonFlags& flags, const std::vector<double>& rates,
              std::optional<double> evaluate, std::ostream& out) {
  CommonFlags adjusted = flags;
  if (!rates.empty()) {
    std::string list = "[";
    for (std::size_t i = 0; i < rates.size(); ++i) {
      list += (i ? "," : "") + io::format_double(rates[i]);
    }
    adjusted.sets.push_back("sweep.a_l=" + list + "]");
  }
  if (evaluate) adjusted.sets.push_back("sweep.evaluate=" + io::format_double(*evaluate));
  const RunConfig config = resolve(adjusted);
  if (config.sweep_a_l.empty()) throw ConfigError("config key 'sweep.a_l' must not be empty");

  PipelineConfig pipeline = config.pipeline();
  EconomicParams evaluate_econ = config.econ;
  evaluate_econ.a_l = config.sweep_evaluate;
  const std::optional<double> norm = normalization_for(config, evaluate_econ);

  std::ostringstream comparison;
  comparison << "a_l_optimize,a_l_evaluate,a,b,c,residual_rms,objective";
  for (double p : config.levels) comparison << ",q_" << io::format_double(p);
  comparison << '\n';

  for (double rate : config.sweep_a_l) {
    PipelineConfig run = pipeline;
    run.econ.a_l = rate;
    PipelineResult r = run_pipeline(run, config.sweep_evaluate, norm);
    r.optimal.normalization = norm;

    const fs::path dir = config.output / rate_dir(rate);
    io::write_solve_result(dir / "solve", r.solve);
    write_simulation(dir / "optimal", r.optimal, config, norm);
    io::write_strategy(dir / "strategy.txt", r.fit.strategy);
    write_simulation(dir / "heuristic", r.heuristic, config, norm);

    const auto& q = std::get<Quadratic>(r.fit.strategy);
    double g_sum = 0.0;
    for (double p : r.heuristic.samples) g_sum += g_eval(-p, config.objective);
    comparison << io::format_double(rate) << ',' << io::format_double(config.sweep_evaluate) << ','
               << io::format_double(q.a) << ',' << io::format_double(q.b) << ','
               << io::format_double(q.c) << ',' << io::format_double(r.fit.residual_rms) << ','
               << io::format_double(g_sum / static_cast<double>(r.heuristic.size()));
    const auto& values = norm ? r.report.normalized : r.report.raw;
    for (double v : values) comparison << ',' << io::format_double(v);
    comparison << '\n';
    out << "sweep: a_L = " << io::format_double(rate) << " done\n";
  }
  io::write_text(config.output / "comparison.csv", comparison.str());
  write_resolved(config.output, config);
  out << "sweep: " << config.sweep_a_l.size() << " runs, written to " << config.output.string()
      << '\n';
  return kOk;
}

int cmd_calibrate(const CommonFlags& flags, const std::string& prices, double window,
                  std::ostream& out) {
  const RunConfig config = resolve(flags);
  const MmmParams p = calibrate_mmm(io::read_prices_csv(prices), {window});
  io::KeyValue kv;
  kv.set("model.mmm.alpha0", p.alpha0);
  kv.set("model.mmm.eta", p.eta);
  kv.set("model.mmm.s0", p.s0);
  io::write_text(config.output / "calibration.txt", kv.str());
  write_resolved(config.output, config);
  out << kv.str();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Asset-liability management: dynamic programming and Monte Carlo runs", "alm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every command");

  CommonFlags flags;
  std::function<int()> action;

  auto* solve_cmd = app.add_subcommand("solve", "backward induction for the optimal policy");
  add_common(solve_cmd, flags);
  solve_cmd->callback([&] { action = [&] { return cmd_solve(flags, out, err); }; });

  std::string strategy = "constant-mix";
  bool snapshots = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo of P_T under a strategy");
  add_common(sim_cmd, flags);
  sim_cmd->add_option("--strategy", strategy,
                      "constant-mix[:weight], a strategy file or a solve directory");
  sim_cmd->add_flag("--snapshots", snapshots, "record (funding ratio, phi) snapshots");
  sim_cmd->callback([&] { action = [&] { return cmd_simulate(flags, strategy, snapshots, out); }; });

  std::string snapshot_file;
  std::string form = "quadratic";
  auto* fit_cmd = app.add_subcommand("fit", "least-squares heuristic from policy snapshots");
  add_common(fit_cmd, flags);
  fit_cmd->add_option("--snapshots", snapshot_file, "snapshots.csv from simulate")->required();
  fit_cmd->add_option("--form", form, "quadratic or linear-quadratic")
      ->check(CLI::IsMember({"quadratic", "linear-quadratic"}));
  fit_cmd->callback([&] { action = [&] { return cmd_fit(flags, snapshot_file, form, out); }; });

  std::string samples_file;
  std::string reference_file;
  auto* report_cmd = app.add_subcommand("report", "quantiles and histogram of P_T samples");
  add_common(report_cmd, flags);
  report_cmd->add_option("--samples", samples_file, "pt_samples.csv")->required();
  report_cmd->add_option("--reference", reference_file,
                         "pt_samples.csv of the normalization run (|min P_T|)");
  report_cmd->callback(
      [&] { action = [&] { return cmd_report(flags, samples_file, reference_file, out); }; });

  std::vector<double> rates;
  std::optional<double> evaluate;
  auto* sweep_cmd = app.add_subcommand("sweep", "solve, fit and evaluate for several a_L");
  add_common(sweep_cmd, flags);
  sweep_cmd->add_option("--a-l", rates, "optimization a_L values (config key: sweep.a_l)")
      ->delimiter(',');
  sweep_cmd->add_option("--evaluate", evaluate, "evaluation a_L (config key: sweep.evaluate)");
  sweep_cmd->callback([&] { action = [&] { return cmd_sweep(flags, rates, evaluate, out); }; });

  std::string prices_file;
  double window = 1.0;
  auto* cal_cmd = app.add_subcommand("calibrate", "fit MMM parameters to an index series");
  add_common(cal_cmd, flags);
  cal_cmd->add_option("--prices", prices_file, "CSV with date_years,index_level")->required();
  cal_cmd->add_option("--window", window, "years per quadratic-variation block");
  cal_cmd->callback(
      [&] { action = [&] { return cmd_calibrate(flags, prices_file, window, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    return action();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::domain_error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}

}  // namespace alm::cli
