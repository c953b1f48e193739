#include <algorithm>
#include <cmath>
#include <vector>

#include "alm/dp_solver.hpp"
#include "alm/errors.hpp"
#include "alm/rng.hpp"
#include "alm/simulator.hpp"
#include "doctest.h"

using namespace alm;

namespace {

struct SmallProblem {
  EconomicParams econ{0.02, 0.02, 0.026, 1.0};
  CashflowSchedule schedule;
  GridSpec grid;
  ObjectiveG objective = ObjectiveG::g3();
  SolverOptions options;

  SmallProblem() {
    const auto buckets = default_buckets();
    schedule = build_schedule(buckets, Spreading::kUniformMonthly, econ);
    grid.a_step = 1500.0;
    grid.d_step = 2500.0;
    grid.s_meshes = 4;
    grid.s_samples = 4000;
    options.controls = uniform_controls(5);
    options.n_inner = 200;
    options.seed = 17;
  }
};

void check_identical(const SolveResult& a, const SolveResult& b) {
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t k = 0; k < a.values.size(); ++k) CHECK(a.values[k] == b.values[k]);
  for (std::size_t k = 0; k < a.policy->phi.size(); ++k) CHECK(a.policy->phi[k] == b.policy->phi[k]);
  CHECK(a.clamp_rate == b.clamp_rate);
}

}  // namespace

TEST_SUITE("dp_solver") {
  TEST_CASE("objective examples") {
    CHECK(g_eval(-5.0, ObjectiveG::g3()) == 0.0);
    CHECK(g_eval(0.0, ObjectiveG::g3()) == 0.0);
    ObjectiveG g1 = ObjectiveG::g1();
    g1.scale = 1.0;
    CHECK(g_eval(1.0, g1) == doctest::Approx(1.4).epsilon(1e-15));
    ObjectiveG g2 = ObjectiveG::g2();
    ObjectiveG g3 = ObjectiveG::g3();
    g2.scale = g3.scale = 1.0;
    CHECK(g_eval(10.0, g2) - g_eval(10.0, g3) == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(ObjectiveG{}.scale == 1000.0);
    CHECK_THROWS_AS((ObjectiveG{-1.0, 0.0, 1000.0}.validate(1e4)), ConfigError);
    CHECK_THROWS_AS((ObjectiveG{0.4, -1.0, 1000.0}.validate(1e4)), ConfigError);
    CHECK_NOTHROW(ObjectiveG::g2().validate(1e5));
  }

  TEST_CASE("uniform controls") {
    CHECK(uniform_controls(3) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(uniform_controls(21).size() == 21);
    CHECK(uniform_controls(21)[10] == 0.5);
  }

  TEST_CASE("index mesh") {
    const MmmParams p{2.317, 0.0542, 70.0};
    CHECK_THROWS_WITH_AS(build_s_mesh(p, 0.0, 1000, 4, 1), doctest::Contains("degenerate partition"),
                         NumericalError);
    CHECK_THROWS_WITH_AS(build_s_mesh(p, 1e-30, 1000, 4, 1),
                         doctest::Contains("degenerate partition"), NumericalError);

    const IndexMesh ten = build_s_mesh(p, 10.0, 10007, 10, 1, 4);
    std::size_t total = 0;
    for (std::size_t c : ten.occupancy) {
      CHECK(c >= 1000);
      CHECK(c <= 1001);
      total += c;
    }
    CHECK(total == 10007);
    CHECK(std::is_sorted(ten.levels.begin(), ten.levels.end()));
    for (std::size_t j = 0; j + 1 < ten.levels.size(); ++j) {
      CHECK(ten.levels[j] < ten.cuts[j]);
      CHECK(ten.cuts[j] < ten.levels[j + 1]);
    }

    // Two meshes: the cut is the sample median. Compare against the median
    // of an independent sample from the exact transition.
    constexpr std::size_t kN = 100000;
    const IndexMesh two = build_s_mesh(p, 10.0, kN, 2, 1, 5);
    NormalStream rng(99, StreamDomain::kTest, 0);
    std::vector<double> xs(kN);
    std::array<double, 4> z{};
    for (double& x : xs) {
      rng.fill(z);
      x = mmm_step(p.s0, 0.0, 10.0, p, z);
    }
    std::nth_element(xs.begin(), xs.begin() + kN / 2, xs.end());
    CHECK(two.cuts.size() == 1);
    CHECK(two.cuts[0] == doctest::Approx(xs[kN / 2]).epsilon(0.01));
  }

  TEST_CASE("node draws are keyed by layer and node") {
    const auto a = node_draws(3, 1, 2, 10, ModelKind::kBlackScholes);
    CHECK(a.size() == 10);
    CHECK(a == node_draws(3, 1, 2, 10, ModelKind::kBlackScholes));
    CHECK(a != node_draws(3, 1, 3, 10, ModelKind::kBlackScholes));
    CHECK(a != node_draws(3, 2, 2, 10, ModelKind::kBlackScholes));
    CHECK(node_draws(3, 1, 2, 10, ModelKind::kMmm).size() == 40);
  }

  TEST_CASE("parallel kernel equals the serial reference") {
    SmallProblem bs;
    const GbmParams model;
    check_identical(solve(model, bs.schedule, bs.econ, bs.grid, bs.objective, bs.options),
                    solve_serial(model, bs.schedule, bs.econ, bs.grid, bs.objective, bs.options));

    SmallProblem mm;
    const MmmParams mmm{2.317, 0.0542, 71.5};
    check_identical(solve(mmm, mm.schedule, mm.econ, mm.grid, mm.objective, mm.options),
                    solve_serial(mmm, mm.schedule, mm.econ, mm.grid, mm.objective, mm.options));
  }

  TEST_CASE("results do not depend on the worker count") {
    SmallProblem p;
    p.options.workers = 1;
    const SolveResult one = solve(GbmParams{}, p.schedule, p.econ, p.grid, p.objective, p.options);
    for (int w : {4, 8}) {
      p.options.workers = w;
      check_identical(one, solve(GbmParams{}, p.schedule, p.econ, p.grid, p.objective, p.options));
    }
  }

  TEST_CASE("terminal layer is g of the terminal surplus") {
    SmallProblem p;
    const SolveResult r = solve(GbmParams{}, p.schedule, p.econ, p.grid, p.objective, p.options);
    const double l_t = liability_value(p.schedule, p.econ.horizon, p.econ);
    const StateGrid& g = r.grids.back();
    for (std::size_t ia = 0; ia < g.assets.size(); ++ia) {
      for (std::size_t id = 0; id < g.endowment.size(); ++id) {
        const double expected = g_eval(-(g.assets[ia] - g.endowment[id] - l_t), p.objective);
        CHECK(r.values.back()[g.flat(ia, id, 0)] == expected);
      }
    }
    CHECK(r.times.size() == 3);
    CHECK(r.initial_assets == doctest::Approx(liability_value(p.schedule, 0.0, p.econ)));
  }

  TEST_CASE("value is non-increasing in assets") {
    SmallProblem p;
    const SolveResult r = solve(GbmParams{}, p.schedule, p.econ, p.grid, p.objective, p.options);
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      const StateGrid& g = r.grids[k];
      for (std::size_t id = 0; id < g.endowment.size(); ++id) {
        for (std::size_t ia = 1; ia < g.assets.size(); ++ia) {
          const double lo = r.values[k][g.flat(ia - 1, id, 0)];
          const double hi = r.values[k][g.flat(ia, id, 0)];
          CHECK(hi <= lo + 1e-12 * std::max(1.0, lo));
        }
      }
    }
  }

  TEST_CASE("deterministic dominance of the all-risky policy") {
    // No volatility and an index drift below a_L: every path is short,
    // more growth means smaller injections, so phi = 1 is optimal.
    SmallProblem p;
    p.econ.horizon = 2.0;
    p.schedule = build_schedule(default_buckets(), Spreading::kUniformMonthly, p.econ);
    p.grid.a_min = 8000.0;
    p.grid.a_max = 16000.0;
    p.grid.a_step = 10.0;
    p.grid.d_step = 10.0;
    p.grid.d_max = 1500.0;
    p.options.n_inner = 1;
    p.objective.scale = 1.0;
    const GbmParams model{0.03, 0.0, 1.0};
    const SolveResult r = solve(model, p.schedule, p.econ, p.grid, p.objective, p.options);

    SimulationOptions sim;
    sim.n_paths = 1;
    const PTSampleSet all_in = simulate(model, p.schedule, p.econ, ConstantMix{1.0}, sim);
    const PTSampleSet cm = simulate(model, p.schedule, p.econ, ConstantMix{0.5}, sim);
    const double v_all_in = g_eval(-all_in.samples[0], p.objective);
    const double v_cm = g_eval(-cm.samples[0], p.objective);
    REQUIRE(v_all_in > 0.0);
    REQUIRE(v_all_in < v_cm);
    CHECK(r.initial_value() == doctest::Approx(v_all_in).epsilon(0.01));
    CHECK(evaluate(Tabulated{r.policy}, {0.0, r.initial_assets, 0.0, r.initial_assets, {}}) == 1.0);
  }

  TEST_CASE("input validation") {
    SmallProblem p;
    p.options.controls = {0.0, 1.5};
    CHECK_THROWS_AS(solve(GbmParams{}, p.schedule, p.econ, p.grid, p.objective, p.options),
                    ConfigError);
    SmallProblem q;
    q.grid.a_max = 100.0;
    CHECK_THROWS_AS(solve(GbmParams{}, q.schedule, q.econ, q.grid, q.objective, q.options),
                    ConfigError);
    SmallProblem m;
    CHECK_THROWS_AS(solve(MmmParams{}, m.schedule, m.econ, m.grid, m.objective, m.options),
                    ConfigError);
  }
}
