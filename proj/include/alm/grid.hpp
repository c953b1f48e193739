#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace alm {

/// Position of a coordinate between two neighbouring axis nodes.
struct Bracket {
  std::size_t lower = 0;
  double weight = 0.0;  // weight of node lower + 1
  bool clamped = false;
};

/// Sorted 1-D set of nodes. Uniform axes locate in O(1), others bisect.
/// Coordinates outside [front, back] clamp to the boundary node.
class Axis {
 public:
  Axis() = default;
  explicit Axis(std::vector<double> nodes);

  /// Nodes lo, lo + step, ... with the last node >= hi.
  static Axis uniform(double lo, double hi, double step);

  std::size_t size() const { return nodes_.size(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  bool is_uniform() const { return uniform_; }
  double step() const { return step_; }
  std::span<const double> nodes() const { return nodes_; }

  Bracket locate(double x) const;

  friend bool operator==(const Axis& a, const Axis& b) { return a.nodes_ == b.nodes_; }

 private:
  std::vector<double> nodes_;
  bool uniform_ = false;
  double step_ = 0.0;
  double inv_step_ = 0.0;
};

/// Tensor grid over (assets, endowment, index). The index axis has a single
/// node for models whose state carries no index level.
struct StateGrid {
  Axis assets;
  Axis endowment;
  Axis index;

  std::size_t size() const { return assets.size() * endowment.size() * index.size(); }
  std::size_t flat(std::size_t ia, std::size_t id, std::size_t is) const {
    return (ia * endowment.size() + id) * index.size() + is;
  }
};

/// Multilinear interpolation of a table laid out by StateGrid::flat.
/// `clamped` is set when the (assets, endowment) query left the box.
double interpolate(const StateGrid& grid, std::span<const double> table, double assets,
                   double endowment, double index, bool* clamped = nullptr);

/// Same, with the index coordinate already located on grid.index.
double interpolate(const StateGrid& grid, std::span<const double> table, double assets,
                   double endowment, const Bracket& index, bool* clamped = nullptr);

}  // namespace alm
