#include "alm/simulator.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>

#include "alm/errors.hpp"
#include "alm/rng.hpp"

namespace alm {

namespace {

struct Setup {
  StepPlan plan;
  std::size_t snapshot_stride = 0;  // 0: no snapshots
  std::size_t snapshot_paths = 0;
};

Setup prepare(const MarketModel& model, const CashflowSchedule& schedule,
              const EconomicParams& econ, const Strategy& strategy,
              const SimulationOptions& options) {
  econ.validate();
  schedule.validate();
  std::visit([](const auto& p) { p.validate(); }, model);
  validate(strategy);
  if (options.n_paths < 1) throw ConfigError("simulation.n_paths must be >= 1");
  if (options.n_paths > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("simulation.n_paths too large");
  }
  if (const auto* tab = std::get_if<Tabulated>(&strategy)) {
    if (tab->grid->model != kind_of(model)) {
      throw ConfigError("tabulated policy was solved for the " +
                        std::string(model_name(tab->grid->model)) +
                        " model and cannot drive a " + std::string(model_name(kind_of(model))) +
                        " simulation");
    }
  }

  Setup setup{make_step_plan(schedule, econ, options.steps_per_year), 0, 0};
  if (options.record_snapshots && options.snapshot_cap > 0) {
    const std::size_t steps = setup.plan.steps();
    const std::size_t total = options.n_paths * steps;
    setup.snapshot_stride = std::max<std::size_t>(1, (total + options.snapshot_cap - 1) /
                                                         options.snapshot_cap);
    setup.snapshot_paths = (options.n_paths + setup.snapshot_stride - 1) / setup.snapshot_stride;
    // Whole paths are kept, so trim the stride until the cap holds.
    while (setup.snapshot_paths * steps > options.snapshot_cap) {
      ++setup.snapshot_stride;
      setup.snapshot_paths = (options.n_paths + setup.snapshot_stride - 1) / setup.snapshot_stride;
    }
  }
  return setup;
}

struct PathOutcome {
  double p_t;
  double d_t;
  std::uint32_t injections;
};

PathOutcome simulate_path(const MarketModel& model, const EconomicParams& econ,
                          const Strategy& strategy, const StepPlan& plan, std::uint64_t seed,
                          std::size_t path, Snapshot* snapshots) {
  const ModelKind kind = kind_of(model);
  const std::size_t width = draws_per_step(kind);
  NormalStream rng(seed, StreamDomain::kSimulation, path);
  std::array<double, 4> z{};

  double index = initial_level(model);
  double assets = plan.liability.front();
  double endowment = 0.0;
  std::uint32_t injections = 0;
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    const double t = plan.times[k];
    AlmState state{t, assets, endowment, plan.liability[k], std::nullopt};
    if (kind == ModelKind::kMmm) state.index = index;
    const double phi = evaluate(strategy, state);
    if (snapshots != nullptr) {
      const double x = state.liability > 0.0 ? funding_ratio(state)
                                             : std::numeric_limits<double>::quiet_NaN();
      snapshots[k] = {static_cast<std::uint32_t>(path), t, x, phi};
    }

    for (std::size_t j = 0; j < width; ++j) z[j] = rng.next();
    const double next = model_step(model, index, t, plan.times[k + 1] - t, econ.r,
                                   std::span<const double>(z.data(), width));
    assets = portfolio_step(assets, phi, next / index) - plan.outflow[k];
    const double injection =
        required_endowment(assets, plan.liability[k + 1], plan.constraint[k] != 0);
    if (injection > 0.0) {
      assets += injection;
      endowment += injection;
      ++injections;
    }
    index = next;
  }
  return {assets - endowment - plan.liability.back(), endowment, injections};
}

PTSampleSet allocate(const MarketModel& model, const Strategy& strategy,
                     const SimulationOptions& options, const Setup& setup) {
  PTSampleSet out;
  out.samples.resize(options.n_paths);
  out.endowments.resize(options.n_paths);
  out.injections.resize(options.n_paths);
  out.snapshots.resize(setup.snapshot_paths * setup.plan.steps());
  out.model = kind_of(model);
  out.strategy = strategy_kind(strategy);
  out.seed = options.seed;
  return out;
}

void drop_undefined_snapshots(PTSampleSet& out) {
  std::erase_if(out.snapshots, [](const Snapshot& s) { return std::isnan(s.funding_ratio); });
}

template <class Body>
void for_each_path(const SimulationOptions& options, bool parallel, Body&& body) {
  const auto n = static_cast<std::int64_t>(options.n_paths);
  if (!parallel) {
    for (std::int64_t p = 0; p < n; ++p) body(static_cast<std::size_t>(p));
    return;
  }
  const int workers = options.workers > 0 ? options.workers : omp_get_max_threads();
  // Exceptions may not cross the parallel region; keep the lowest path's.
  std::exception_ptr error;
  std::int64_t error_path = n;
#pragma omp parallel for schedule(static) num_threads(workers)
  for (std::int64_t p = 0; p < n; ++p) {
    try {
      body(static_cast<std::size_t>(p));
    } catch (...) {
#pragma omp critical(alm_simulation_error)
      if (p < error_path) {
        error_path = p;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

PTSampleSet run(const MarketModel& model, const CashflowSchedule& schedule,
                const EconomicParams& econ, const Strategy& strategy,
                const SimulationOptions& options, bool parallel) {
  const Setup setup = prepare(model, schedule, econ, strategy, options);
  PTSampleSet out = allocate(model, strategy, options, setup);
  const std::size_t steps = setup.plan.steps();
  for_each_path(options, parallel, [&](std::size_t path) {
    Snapshot* slots = nullptr;
    if (setup.snapshot_stride > 0 && path % setup.snapshot_stride == 0) {
      slots = out.snapshots.data() + (path / setup.snapshot_stride) * steps;
    }
    const PathOutcome r =
        simulate_path(model, econ, strategy, setup.plan, options.seed, path, slots);
    out.samples[path] = r.p_t;
    out.endowments[path] = r.d_t;
    out.injections[path] = r.injections;
  });
  drop_undefined_snapshots(out);
  return out;
}

}  // namespace

PTSampleSet simulate(const MarketModel& model, const CashflowSchedule& schedule,
                     const EconomicParams& econ, const Strategy& strategy,
                     const SimulationOptions& options) {
  return run(model, schedule, econ, strategy, options, true);
}

PTSampleSet simulate_serial(const MarketModel& model, const CashflowSchedule& schedule,
                            const EconomicParams& econ, const Strategy& strategy,
                            const SimulationOptions& options) {
  return run(model, schedule, econ, strategy, options, false);
}

}  // namespace alm
