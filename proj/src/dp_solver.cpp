#include "alm/dp_solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "alm/errors.hpp"
#include "alm/portfolio.hpp"
#include "alm/rng.hpp"

namespace alm {

void ObjectiveG::validate(double max_loss) const {
  if (!(scale > 0.0)) throw ConfigError("objective.scale must be > 0");
  if (!std::isfinite(c2) || !std::isfinite(c3)) throw ConfigError("objective coefficients must be finite");
  const double x_max = std::max(max_loss, 0.0) / scale;
  // g'' = 2 c2 + 6 c3 x is affine: check both ends.
  if (2.0 * c2 < 0.0 || 2.0 * c2 + 6.0 * c3 * x_max < 0.0) {
    throw ConfigError("objective g is not convex on the reachable loss range");
  }
  // g' = 1 + 2 c2 x + 3 c3 x²; with g convex it is increasing, so g'(0) = 1 suffices.
}

double g_eval(double x, const ObjectiveG& objective) {
  if (!(x > 0.0)) return 0.0;
  const double u = x / objective.scale;
  return u + objective.c2 * u * u + objective.c3 * u * u * u;
}

std::vector<double> uniform_controls(std::size_t count) {
  if (count < 1) throw ConfigError("control set must be nonempty");
  if (count == 1) return {0.0};
  std::vector<double> controls(count);
  for (std::size_t i = 0; i < count; ++i) {
    controls[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return controls;
}

IndexMesh build_s_mesh(const MmmParams& model, double t, std::size_t n_samples,
                       std::size_t n_meshes, std::uint64_t seed, std::uint64_t stream) {
  model.validate();
  if (n_meshes < 2) throw ConfigError("index mesh needs at least 2 meshes");
  if (n_samples < 10 * n_meshes) throw ConfigError("index mesh needs >= 10 samples per mesh");

  std::vector<double> samples(n_samples);
  NormalStream rng(seed, StreamDomain::kMesh, stream);
  std::array<double, 4> z{};
  for (double& s : samples) {
    rng.fill(z);
    s = mmm_step(model.s0, 0.0, t, model, z);
  }
  std::sort(samples.begin(), samples.end());
  const double spread = samples.back() - samples.front();
  if (!(spread > 1e-12 * std::max(1.0, std::abs(samples.front())))) {
    throw NumericalError("degenerate partition: simulated index levels have no spread");
  }

  IndexMesh mesh;
  mesh.levels.resize(n_meshes);
  mesh.occupancy.resize(n_meshes);
  mesh.cuts.resize(n_meshes - 1);
  for (std::size_t j = 0; j < n_meshes; ++j) {
    const std::size_t begin = j * n_samples / n_meshes;
    const std::size_t end = (j + 1) * n_samples / n_meshes;
    const std::size_t count = end - begin;
    mesh.occupancy[j] = count;
    mesh.levels[j] = count % 2 == 1
                         ? samples[begin + count / 2]
                         : 0.5 * (samples[begin + count / 2 - 1] + samples[begin + count / 2]);
    if (j + 1 < n_meshes) mesh.cuts[j] = 0.5 * (samples[end - 1] + samples[end]);
  }
  for (std::size_t j = 1; j < n_meshes; ++j) {
    if (!(mesh.levels[j] > mesh.levels[j - 1])) {
      throw NumericalError("degenerate partition: mesh levels are not distinct");
    }
  }
  return mesh;
}

std::vector<double> node_draws(std::uint64_t seed, std::size_t layer, std::size_t node,
                               std::size_t n_inner, ModelKind kind) {
  std::vector<double> draws(n_inner * draws_per_step(kind));
  NormalStream rng(seed, StreamDomain::kSolver,
                   solver_stream(static_cast<std::uint32_t>(layer), static_cast<std::uint32_t>(node)));
  rng.fill(draws);
  return draws;
}

double SolveResult::initial_value() const {
  return interpolate(grids.front(), values.front(), initial_assets, 0.0, initial_level(model));
}

namespace {

struct Problem {
  MarketModel model;
  ModelKind kind;
  EconomicParams econ;
  ObjectiveG objective;
  SolverOptions options;
  StepPlan plan;
  std::vector<StateGrid> grids;
};

struct NodeOutcome {
  double value = 0.0;
  double phi = 0.0;
  std::size_t clamps = 0;
};

struct NodeState {
  double assets;
  double endowment;
  double index;
};

NodeState node_state(const StateGrid& grid, std::size_t node) {
  const std::size_t ns = grid.index.size();
  const std::size_t nd = grid.endowment.size();
  const std::size_t is = node % ns;
  const std::size_t id = (node / ns) % nd;
  const std::size_t ia = node / (ns * nd);
  return {grid.assets[ia], grid.endowment[id], grid.index[is]};
}

Problem set_up(const MarketModel& model, const CashflowSchedule& schedule,
               const EconomicParams& econ, const GridSpec& spec, const ObjectiveG& objective,
               const SolverOptions& options) {
  econ.validate();
  schedule.validate();
  std::visit([](const auto& p) { p.validate(); }, model);
  if (options.controls.empty()) throw ConfigError("control set must be nonempty");
  for (double c : options.controls) {
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("controls must lie in [0, 1]");
  }
  if (options.n_inner < 1) throw ConfigError("solver.n_inner must be >= 1");

  Problem p{model, kind_of(model), econ, objective, options,
            make_step_plan(schedule, econ, options.steps_per_year), {}};
  std::sort(p.options.controls.begin(), p.options.controls.end());

  const double l0 = p.plan.liability.front();
  const double a_max = spec.a_max.value_or(3.0 * l0);
  const double d_max = spec.d_max.value_or(1.5 * l0);
  if (!(spec.a_min <= l0 && l0 <= a_max)) throw ConfigError("asset grid must contain A_0 = L_0");
  if (!(spec.a_min >= 0.0)) throw ConfigError("grid.a_min must be >= 0");
  const Axis assets = Axis::uniform(spec.a_min, a_max, spec.a_step);
  const Axis endowment = Axis::uniform(0.0, d_max, spec.d_step);
  objective.validate(endowment.back() + p.plan.liability.back() - assets.front());

  const std::size_t n_layers = p.plan.times.size();
  p.grids.resize(n_layers);
  std::vector<Axis> index_axes(n_layers, Axis({initial_level(model)}));
  if (p.kind == ModelKind::kMmm) {
    const auto& mmm = std::get<MmmParams>(model);
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(options.workers > 0 ? options.workers : omp_get_max_threads())
    for (std::size_t k = 1; k < n_layers; ++k) {
      try {
        const IndexMesh mesh =
            build_s_mesh(mmm, p.plan.times[k], spec.s_samples, spec.s_meshes, options.seed, k);
        index_axes[k] = Axis(mesh.levels);
      } catch (...) {
#pragma omp critical(alm_mesh_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }
  for (std::size_t k = 0; k < n_layers; ++k) p.grids[k] = {assets, endowment, index_axes[k]};
  return p;
}

SolveResult finish(const Problem& p, const GridSpec& spec, std::vector<std::vector<double>> values,
                   std::vector<std::vector<double>> phi, std::vector<std::size_t> clamps) {
  SolveResult result;
  result.model = p.model;
  result.econ = p.econ;
  result.grid_spec = spec;
  result.objective = p.objective;
  result.options = p.options;
  result.initial_assets = p.plan.liability.front();
  result.times = p.plan.times;
  result.grids = p.grids;
  result.values = std::move(values);

  auto policy = std::make_shared<PolicyGrid>();
  policy->model = p.kind;
  const std::size_t n_steps = p.plan.steps();
  policy->times.assign(p.plan.times.begin(), p.plan.times.begin() + static_cast<long>(n_steps));
  policy->grids.assign(p.grids.begin(), p.grids.begin() + static_cast<long>(n_steps));
  policy->phi = std::move(phi);
  result.policy = std::move(policy);

  result.clamp_rate.resize(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double queries = static_cast<double>(p.grids[k].size()) *
                           static_cast<double>(p.options.controls.size()) *
                           static_cast<double>(p.options.n_inner);
    result.clamp_rate[k] = static_cast<double>(clamps[k]) / queries;
    if (result.clamp_rate[k] > 0.05) {
      std::ostringstream msg;
      msg << "layer " << k << " clamp rate " << result.clamp_rate[k] << " exceeds 5%";
      result.warnings.push_back(msg.str());
    }
  }
  return result;
}

std::vector<double> terminal_layer(const Problem& p) {
  const StateGrid& grid = p.grids.back();
  const double liability = p.plan.liability.back();
  std::vector<double> values(grid.size());
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const NodeState s = node_state(grid, node);
    values[node] = g_eval(-(s.assets - s.endowment - liability), p.objective);
  }
  return values;
}

// Straightforward per-node evaluation: every (control, sample) pair
// recomputes the index move from its draws.
NodeOutcome reference_node(const Problem& p, std::size_t k, std::size_t node,
                           std::span<const double> next_values) {
  const StateGrid& grid = p.grids[k];
  const StateGrid& next = p.grids[k + 1];
  const NodeState s = node_state(grid, node);
  const double t = p.plan.times[k];
  const double dt = p.plan.times[k + 1] - t;
  const std::size_t width = draws_per_step(p.kind);
  const std::vector<double> draws = node_draws(p.options.seed, k, node, p.options.n_inner, p.kind);

  NodeOutcome best{std::numeric_limits<double>::infinity(), 0.0, 0};
  for (double phi : p.options.controls) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.options.n_inner; ++i) {
      const std::span<const double> z(draws.data() + i * width, width);
      const double index = model_step(p.model, s.index, t, dt, p.econ.r, z);
      double assets = portfolio_step(s.assets, phi, index / s.index) - p.plan.outflow[k];
      const double injection =
          required_endowment(assets, p.plan.liability[k + 1], p.plan.constraint[k] != 0);
      assets += injection;
      bool clamped = false;
      sum += interpolate(next, next_values, assets, s.endowment + injection, index, &clamped);
      best.clamps += clamped;
    }
    const double mean = sum / static_cast<double>(p.options.n_inner);
    if (mean < best.value) {
      best.value = mean;
      best.phi = phi;
    }
  }
  return best;
}

// Same arithmetic as reference_node with the index moves hoisted out of the
// control loop.
struct NodeKernel {
  const Problem& p;
  std::vector<double> next_index;
  std::vector<Bracket> next_bracket;
  std::vector<double> gross;

  explicit NodeKernel(const Problem& problem)
      : p(problem),
        next_index(problem.options.n_inner),
        next_bracket(problem.options.n_inner),
        gross(problem.options.n_inner) {}

  NodeOutcome operator()(std::size_t k, std::size_t node, std::span<const double> next_values) {
    const StateGrid& grid = p.grids[k];
    const StateGrid& next = p.grids[k + 1];
    const NodeState s = node_state(grid, node);
    const double t = p.plan.times[k];
    const double dt = p.plan.times[k + 1] - t;
    const std::size_t width = draws_per_step(p.kind);
    const std::size_t n = p.options.n_inner;
    const std::vector<double> draws = node_draws(p.options.seed, k, node, n, p.kind);
    for (std::size_t i = 0; i < n; ++i) {
      const std::span<const double> z(draws.data() + i * width, width);
      next_index[i] = model_step(p.model, s.index, t, dt, p.econ.r, z);
      next_bracket[i] = next.index.locate(next_index[i]);
      gross[i] = next_index[i] / s.index;
    }

    const double outflow = p.plan.outflow[k];
    const double liability = p.plan.liability[k + 1];
    const bool constraint = p.plan.constraint[k] != 0;
    NodeOutcome best{std::numeric_limits<double>::infinity(), 0.0, 0};
    for (double phi : p.options.controls) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double assets = portfolio_step(s.assets, phi, gross[i]) - outflow;
        const double injection = required_endowment(assets, liability, constraint);
        assets += injection;
        bool clamped = false;
        sum += interpolate(next, next_values, assets, s.endowment + injection, next_bracket[i],
                           &clamped);
        best.clamps += clamped;
      }
      const double mean = sum / static_cast<double>(n);
      if (mean < best.value) {
        best.value = mean;
        best.phi = phi;
      }
    }
    return best;
  }
};

template <class LayerSweep>
SolveResult run_backward(const Problem& p, const GridSpec& spec, LayerSweep&& sweep) {
  const std::size_t n_steps = p.plan.steps();
  std::vector<std::vector<double>> values(n_steps + 1);
  std::vector<std::vector<double>> phi(n_steps);
  std::vector<std::size_t> clamps(n_steps, 0);
  values[n_steps] = terminal_layer(p);
  for (std::size_t k = n_steps; k-- > 0;) {
    values[k].resize(p.grids[k].size());
    phi[k].resize(p.grids[k].size());
    clamps[k] = sweep(k, values[k + 1], values[k], phi[k]);
  }
  return finish(p, spec, std::move(values), std::move(phi), std::move(clamps));
}

}  // namespace

SolveResult solve(const MarketModel& model, const CashflowSchedule& schedule,
                  const EconomicParams& econ, const GridSpec& grid, const ObjectiveG& objective,
                  const SolverOptions& options) {
  const Problem p = set_up(model, schedule, econ, grid, objective, options);
  const int workers = options.workers > 0 ? options.workers : omp_get_max_threads();
  return run_backward(p, grid, [&](std::size_t k, const std::vector<double>& next,
                                   std::vector<double>& out, std::vector<double>& out_phi) {
    const auto n_nodes = static_cast<std::int64_t>(p.grids[k].size());
    std::size_t clamps = 0;
    std::exception_ptr error;
#pragma omp parallel num_threads(workers) reduction(+ : clamps)
    {
      NodeKernel kernel(p);
#pragma omp for schedule(dynamic, 4)
      for (std::int64_t node = 0; node < n_nodes; ++node) {
        try {
          const NodeOutcome r = kernel(k, static_cast<std::size_t>(node), next);
          out[static_cast<std::size_t>(node)] = r.value;
          out_phi[static_cast<std::size_t>(node)] = r.phi;
          clamps += r.clamps;
        } catch (...) {
#pragma omp critical(alm_solver_error)
          if (!error) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
    return clamps;
  });
}

SolveResult solve_serial(const MarketModel& model, const CashflowSchedule& schedule,
                         const EconomicParams& econ, const GridSpec& grid,
                         const ObjectiveG& objective, const SolverOptions& options) {
  const Problem p = set_up(model, schedule, econ, grid, objective, options);
  return run_backward(p, grid, [&](std::size_t k, const std::vector<double>& next,
                                   std::vector<double>& out, std::vector<double>& out_phi) {
    std::size_t clamps = 0;
    for (std::size_t node = 0; node < p.grids[k].size(); ++node) {
      const NodeOutcome r = reference_node(p, k, node, next);
      out[node] = r.value;
      out_phi[node] = r.phi;
      clamps += r.clamps;
    }
    return clamps;
  });
}

}  // namespace alm
