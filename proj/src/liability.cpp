#include "alm/liability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alm/errors.hpp"

namespace alm {

namespace {

constexpr double kDateTolerance = 1e-9;
constexpr int kMonthsPerBucket = 60;

}  // namespace

void EconomicParams::validate() const {
  if (!(a_l > 0.0)) throw ConfigError("economics.a_l must be > 0");
  if (!(horizon > 0.0)) throw ConfigError("economics.horizon must be > 0");
  if (!std::isfinite(r) || !std::isfinite(gamma)) {
    throw ConfigError("economics.r and economics.gamma must be finite");
  }
}

double CashflowSchedule::total() const {
  return std::accumulate(payments.begin(), payments.end(), 0.0,
                         [](double acc, const Payment& p) { return acc + p.amount; });
}

void CashflowSchedule::validate() const {
  for (std::size_t i = 0; i < payments.size(); ++i) {
    if (!(payments[i].amount >= 0.0)) throw ConfigError("payment amounts must be >= 0");
    if (i > 0 && !(payments[i].t > payments[i - 1].t)) {
      throw ConfigError("payment dates must be strictly increasing");
    }
  }
  for (std::size_t i = 1; i < constraint_dates.size(); ++i) {
    if (!(constraint_dates[i] > constraint_dates[i - 1])) {
      throw ConfigError("constraint dates must be strictly increasing");
    }
  }
}

std::vector<Bucket> default_buckets() {
  return {{2015, 200}, {2020, 950}, {2025, 5550}, {2030, 7950},
          {2035, 2700}, {2040, 1500}, {2045, 500}};
}

std::vector<double> semiannual_dates(double horizon) {
  std::vector<double> dates;
  for (int k = 1; 0.5 * k <= horizon + kDateTolerance; ++k) dates.push_back(0.5 * k);
  return dates;
}

CashflowSchedule build_schedule(std::span<const Bucket> buckets, Spreading spreading,
                                const EconomicParams& econ) {
  econ.validate();
  if (spreading != Spreading::kUniformMonthly) throw ConfigError("unknown spreading policy");

  std::vector<Bucket> sorted(buckets.begin(), buckets.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Bucket& a, const Bucket& b) { return a.year < b.year; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].total >= 0.0)) throw ConfigError("bucket totals must be >= 0");
    if (i > 0 && sorted[i].year < sorted[i - 1].year + 5.0) {
      throw ConfigError("overlapping buckets: " + std::to_string(sorted[i - 1].year) + " and " +
                        std::to_string(sorted[i].year));
    }
  }

  CashflowSchedule schedule;
  schedule.constraint_dates = semiannual_dates(econ.horizon);
  if (sorted.empty()) return schedule;

  const double origin = sorted.front().year;
  schedule.payments.reserve(sorted.size() * kMonthsPerBucket);
  for (const Bucket& bucket : sorted) {
    const double offset = bucket.year - origin;
    const double monthly = bucket.total / kMonthsPerBucket;
    for (int m = 1; m <= kMonthsPerBucket; ++m) {
      schedule.payments.push_back({offset + m / 12.0, monthly});
    }
  }
  return schedule;
}

double liability_value(const CashflowSchedule& schedule, double t, const EconomicParams& econ) {
  const auto first = std::upper_bound(
      schedule.payments.begin(), schedule.payments.end(), t,
      [](double value, const Payment& p) { return value < p.t; });
  double sum = 0.0;
  for (auto it = first; it != schedule.payments.end(); ++it) {
    sum += it->amount * std::exp(-econ.a_l * (it->t - t));
  }
  return std::exp((econ.gamma - econ.r) * t) * sum;
}

double required_endowment(double assets, double liability, bool is_constraint_date) {
  if (!is_constraint_date) return 0.0;
  return std::max(liability - assets, 0.0);
}

double actualized_outflow(const CashflowSchedule& schedule, double t0, double t1,
                          const EconomicParams& econ) {
  double sum = 0.0;
  for (const Payment& p : schedule.payments) {
    if (p.t > t0 && p.t <= t1) sum += p.amount * std::exp((econ.gamma - econ.r) * p.t);
  }
  return sum;
}

StepPlan make_step_plan(const CashflowSchedule& schedule, const EconomicParams& econ,
                        int steps_per_year) {
  econ.validate();
  if (steps_per_year <= 0) throw ConfigError("steps_per_year must be > 0");
  const double exact = econ.horizon * steps_per_year;
  const auto n_steps = static_cast<std::size_t>(std::llround(exact));
  if (n_steps == 0 || std::abs(exact - static_cast<double>(n_steps)) > 1e-9) {
    throw ConfigError("horizon must be a whole number of rebalancing steps");
  }

  StepPlan plan;
  plan.times.resize(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    plan.times[k] = static_cast<double>(k) / steps_per_year;
  }
  plan.times.back() = econ.horizon;

  plan.liability.resize(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    plan.liability[k] = liability_value(schedule, plan.times[k], econ);
  }

  plan.outflow.resize(n_steps);
  plan.constraint.resize(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    plan.outflow[k] = actualized_outflow(schedule, plan.times[k], plan.times[k + 1], econ);
    const double end = plan.times[k + 1];
    plan.constraint[k] = std::any_of(schedule.constraint_dates.begin(),
                                     schedule.constraint_dates.end(),
                                     [end](double c) { return std::abs(c - end) <= kDateTolerance; });
  }
  for (double c : schedule.constraint_dates) {
    if (c <= 0.0 || c > econ.horizon + kDateTolerance) continue;
    const double pos = c * steps_per_year;
    if (std::abs(pos - std::round(pos)) > 1e-6) {
      throw ConfigError("constraint date " + std::to_string(c) +
                        " does not fall on a rebalancing date");
    }
  }
  return plan;
}

}  // namespace alm
