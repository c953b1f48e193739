#include "alm/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "alm/errors.hpp"

namespace alm {

namespace {

double clamp_unit(double value) { return std::clamp(value, 0.0, 1.0); }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::size_t PolicyGrid::layer_at(double t) const {
  if (times.empty()) throw ConfigError("empty policy grid");
  const auto it = std::upper_bound(times.begin(), times.end(), t + 1e-9);
  if (it == times.begin()) return 0;
  return static_cast<std::size_t>(it - times.begin()) - 1;
}

double funding_ratio(const AlmState& state) {
  if (!(state.liability > 0.0)) {
    throw std::domain_error("funding ratio undefined: liability is not positive");
  }
  return (state.assets - state.endowment) / state.liability;
}

double evaluate(const Strategy& strategy, const AlmState& state) {
  return std::visit(
      Overloaded{
          [](const ConstantMix& s) { return clamp_unit(s.weight); },
          [&](const Quadratic& s) {
            const double x = funding_ratio(state);
            return clamp_unit(s.a + s.b * x + s.c * x * x);
          },
          [&](const LinearQuadratic& s) {
            const double x = funding_ratio(state);
            const double t = state.t;
            return clamp_unit((s.a0 + s.a1 * t) + (s.b0 + s.b1 * t) * x +
                              (s.c0 + s.c1 * t) * x * x);
          },
          [&](const Tabulated& s) {
            const PolicyGrid& grid = *s.grid;
            const bool needs_index = grid.model == ModelKind::kMmm;
            if (needs_index && !state.index) {
              throw ConfigError("tabulated policy needs the index level in the state");
            }
            const std::size_t k = grid.layer_at(state.t);
            return clamp_unit(interpolate(grid.grids[k], grid.phi[k], state.assets,
                                          state.endowment, state.index.value_or(0.0)));
          },
      },
      strategy);
}

std::string strategy_kind(const Strategy& strategy) {
  return std::visit(Overloaded{
                        [](const ConstantMix&) { return std::string("constant-mix"); },
                        [](const Quadratic&) { return std::string("quadratic"); },
                        [](const LinearQuadratic&) { return std::string("linear-quadratic"); },
                        [](const Tabulated&) { return std::string("tabulated"); },
                    },
                    strategy);
}

void validate(const Strategy& strategy) {
  if (const auto* cm = std::get_if<ConstantMix>(&strategy)) {
    if (!(cm->weight >= 0.0 && cm->weight <= 1.0)) {
      throw ConfigError("constant-mix weight must lie in [0, 1]");
    }
  }
  if (const auto* tab = std::get_if<Tabulated>(&strategy)) {
    if (!tab->grid || tab->grid->times.empty()) throw ConfigError("tabulated strategy has no grid");
  }
}

}  // namespace alm
