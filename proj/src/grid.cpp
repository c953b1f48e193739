#include "alm/grid.hpp"

#include <algorithm>
#include <cmath>

#include "alm/errors.hpp"

namespace alm {

Axis::Axis(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ConfigError("axis needs at least one node");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1])) throw ConfigError("axis nodes must be strictly increasing");
  }
}

Axis Axis::uniform(double lo, double hi, double step) {
  if (!(step > 0.0)) throw ConfigError("axis step must be > 0");
  if (!(hi >= lo)) throw ConfigError("axis upper bound below lower bound");
  const auto intervals = static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9));
  std::vector<double> nodes(intervals + 1);
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = lo + step * static_cast<double>(i);
  Axis axis(std::move(nodes));
  axis.uniform_ = true;
  axis.step_ = step;
  axis.inv_step_ = 1.0 / step;
  return axis;
}

Bracket Axis::locate(double x) const {
  const std::size_t n = nodes_.size();
  if (n == 1) return {0, 0.0, x != nodes_[0]};
  if (!(x > nodes_.front())) return {0, 0.0, x < nodes_.front()};
  if (!(x < nodes_.back())) return {n - 2, 1.0, x > nodes_.back()};

  std::size_t lower;
  if (uniform_) {
    lower = std::min(static_cast<std::size_t>((x - nodes_.front()) * inv_step_), n - 2);
  } else {
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    lower = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  }
  const double weight = (x - nodes_[lower]) / (nodes_[lower + 1] - nodes_[lower]);
  return {lower, std::clamp(weight, 0.0, 1.0), false};
}

double interpolate(const StateGrid& grid, std::span<const double> table, double assets,
                   double endowment, double index, bool* clamped) {
  return interpolate(grid, table, assets, endowment, grid.index.locate(index), clamped);
}

double interpolate(const StateGrid& grid, std::span<const double> table, double assets,
                   double endowment, const Bracket& index, bool* clamped) {
  const Bracket ba = grid.assets.locate(assets);
  const Bracket bd = grid.endowment.locate(endowment);
  if (clamped != nullptr) *clamped = ba.clamped || bd.clamped;

  const std::size_t na = grid.assets.size();
  const std::size_t nd = grid.endowment.size();
  const std::size_t ia1 = na > 1 ? ba.lower + 1 : ba.lower;
  const std::size_t id1 = nd > 1 ? bd.lower + 1 : bd.lower;

  const auto bilinear = [&](std::size_t is) {
    const double v00 = table[grid.flat(ba.lower, bd.lower, is)];
    const double v01 = table[grid.flat(ba.lower, id1, is)];
    const double v10 = table[grid.flat(ia1, bd.lower, is)];
    const double v11 = table[grid.flat(ia1, id1, is)];
    const double low = v00 + bd.weight * (v01 - v00);
    const double high = v10 + bd.weight * (v11 - v10);
    return low + ba.weight * (high - low);
  };

  if (grid.index.size() == 1) return bilinear(0);
  const double v0 = bilinear(index.lower);
  const double v1 = bilinear(index.lower + 1);
  return v0 + index.weight * (v1 - v0);
}

}  // namespace alm
