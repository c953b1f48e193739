#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "alm/grid.hpp"
#include "alm/market_models.hpp"

namespace alm {

/// Optimal risky fractions tabulated on the solver grid, one layer per
/// decision date.
struct PolicyGrid {
  ModelKind model = ModelKind::kBlackScholes;
  std::vector<double> times;
  std::vector<StateGrid> grids;
  std::vector<std::vector<double>> phi;

  /// Layer whose date matches t, else the last layer dated before t.
  std::size_t layer_at(double t) const;
};

struct ConstantMix {
  double weight = 0.5;
};

/// F(x) = a + b x + c x² of the funding ratio x.
struct Quadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// F(t, x) = (a0 + a1 t) + (b0 + b1 t) x + (c0 + c1 t) x².
struct LinearQuadratic {
  double a0 = 0.0, a1 = 0.0;
  double b0 = 0.0, b1 = 0.0;
  double c0 = 0.0, c1 = 0.0;
};

struct Tabulated {
  std::shared_ptr<const PolicyGrid> grid;
};

using Strategy = std::variant<ConstantMix, Quadratic, LinearQuadratic, Tabulated>;

struct AlmState {
  double t = 0.0;
  double assets = 0.0;
  double endowment = 0.0;
  double liability = 0.0;
  std::optional<double> index;
};

/// (A − D) / L. Throws std::domain_error when L is not positive.
double funding_ratio(const AlmState& state);

/// Risky fraction in [0, 1] prescribed by the strategy in the given state.
double evaluate(const Strategy& strategy, const AlmState& state);

std::string strategy_kind(const Strategy& strategy);

void validate(const Strategy& strategy);

}  // namespace alm
